#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "qplab/cocycle.hpp"
#include "qplab/lattice.hpp"
#include "qplab/symplectic.hpp"
#include "support/test_rng.hpp"

using namespace qplab;

namespace {

CocycleSampler amo_cocycle(double eps, double E) {
    return {TrigPoly::cosine(), DecayingSymbol::cosine(), eps, Complex(E), Frequency::golden()};
}

// Scalar recursion of the banded eigen-equation, renormalized; returns the
// window (u_{n+l-1}, ..., u_{n-l}) and the log of the factored-out scale.
std::pair<Eigen::VectorXcd, double> recursion_window(const TrigPoly& v, const DecayingSymbol& w,
                                                     double eps, Complex E, const Frequency& alpha,
                                                     const TorusPoint& theta0,
                                                     Eigen::VectorXcd init, long n) {
    const int l = v.degree();
    // u[j] holds u_{j - l}; the seed window fills j = 0 .. 2l-1
    std::vector<Complex> u((std::size_t)(2 * l), Complex(0));
    for (int p = 0; p < 2 * l; ++p) u[(std::size_t)(2 * l - 1 - p)] = init(p);
    double log_scale = 0;
    for (long step = 0; step < n; ++step) {
        // u_{site + l} from the equation at site = step
        TorusPoint th = alpha.advance(theta0, step);
        Complex rhs = (E - v.coeff(0) - eps * w.evaluate_complex(th)) * u[u.size() - (std::size_t)l];
        for (int j = 1; j <= l - 1; ++j) rhs -= v.coeff(j) * u[u.size() - (std::size_t)(l - j)];
        for (int j = 1; j <= l; ++j) rhs -= v.coeff(-j) * u[u.size() - (std::size_t)(l + j)];
        u.push_back(rhs / v.coeff(l));
        if ((step + 1) % 16 == 0) {
            double m = 0;
            for (std::size_t i = u.size() - (std::size_t)(2 * l); i < u.size(); ++i)
                m = std::max(m, std::abs(u[i]));
            if (m > 0) {
                for (auto& c : u) c /= m;
                log_scale += std::log(m);
            }
        }
    }
    Eigen::VectorXcd window(2 * l);
    for (int p = 0; p < 2 * l; ++p) window(p) = u[u.size() - 1 - (std::size_t)p];
    return {window, log_scale};
}

// relative distance between a1*e^{s1} and a2*e^{s2} without forming the values
double scaled_rel_err(const Eigen::VectorXcd& a1, double s1, const Eigen::VectorXcd& a2,
                      double s2) {
    double n1 = a1.norm(), n2 = a2.norm();
    if (n1 == 0 && n2 == 0) return 0;
    double l1 = s1 + std::log(n1), l2 = s2 + std::log(n2);
    double lmax = std::max(l1, l2);
    Eigen::VectorXcd b1 = a1 * std::exp(s1 - lmax);
    Eigen::VectorXcd b2 = a2 * std::exp(s2 - lmax);
    return (b1 - b2).norm() / std::max(b1.norm(), b2.norm());
}

}  // namespace

TEST_CASE("companion matrix layout") {
    SECTION("quarter turn at E = 0, eps = 0") {
        auto c = amo_cocycle(0.0, 0.0);
        Eigen::MatrixXcd A = c({0.3});
        CHECK(std::abs(A(0, 0)) < 1e-15);
        CHECK(std::abs(A(0, 1) + Complex(1)) < 1e-15);
        CHECK(std::abs(A(1, 0) - Complex(1)) < 1e-15);
        CHECK(std::abs(A(1, 1)) < 1e-15);
    }
    SECTION("AMO form [[E - eps w, -1], [1, 0]]") {
        auto c = amo_cocycle(0.7, 1.3);
        double th = 0.21;
        Eigen::MatrixXcd A = c({th});
        CHECK(A(0, 0).real() == Catch::Approx(1.3 - 0.7 * 2.0 * std::cos(kTwoPi * th)));
        CHECK(A(0, 1).real() == Catch::Approx(-1.0));
    }
    SECTION("unit determinant for real polynomials") {
        std::mt19937_64 rng(31);
        for (int l : {1, 2, 3}) {
            CocycleSampler c(qptest::random_trig_poly(rng, l), qptest::random_symbol(rng, 1, 3),
                             0.4, Complex(0.7), Frequency::golden());
            for (int i = 0; i < 100; ++i) {
                double det = std::abs(c({qptest::uniform(rng, 0, 1)}).determinant());
                CHECK(det == Catch::Approx(1.0).epsilon(1e-10));
            }
        }
    }
    SECTION("subdiagonal identity and zero last column") {
        std::mt19937_64 rng(37);
        CocycleSampler c(qptest::random_trig_poly(rng, 2), qptest::random_symbol(rng, 1, 2), 0.3,
                         Complex(0.2), Frequency::golden());
        Eigen::MatrixXcd A = c({0.6});
        for (int i = 1; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                CHECK(std::abs(A(i, j) - (j == i - 1 ? Complex(1) : Complex(0))) < 1e-15);
    }
}

TEST_CASE("iterate") {
    SECTION("n = 1 is a single sample") {
        auto c = amo_cocycle(0.5, 0.9);
        TorusPoint th{0.15};
        auto P = iterate(c, th, 1);
        CHECK((P.value() - c(th)).norm() < 1e-14);
    }
    SECTION("constant cocycle is a matrix power") {
        auto c = amo_cocycle(0.0, 1.7);
        Eigen::MatrixXcd A = c({0.0});
        Eigen::MatrixXcd P5 = A * A * A * A * A;
        CHECK((iterate(c, {0.4}, 5).value() - P5).norm() < 1e-12);
    }
    SECTION("product equals the scalar recursion of the dual eigen-equation") {
        std::mt19937_64 rng(41);
        for (int rep = 0; rep < 50; ++rep) {
            int l = 1 + (int)(rng() % 3);
            TrigPoly v = qptest::random_trig_poly(rng, l);
            DecayingSymbol w = qptest::random_symbol(rng, 1, 4);
            double eps = qptest::uniform(rng, -1.5, 1.5);
            Complex E(qptest::uniform(rng, -3, 3), 0);
            Frequency alpha = Frequency::golden();
            CocycleSampler c(v, w, eps, E, alpha);
            TorusPoint th0 = qptest::random_point(rng, 1);
            long n = 1 + (long)(rng() % 400);
            Eigen::VectorXcd init(2 * l);
            for (int i = 0; i < 2 * l; ++i) init(i) = qptest::random_complex(rng);

            auto P = iterate(c, th0, n);
            Eigen::VectorXcd via_product = P.m * init;
            auto [window, log_scale] = recursion_window(v, w, eps, E, alpha, th0, init, n);
            CHECK(scaled_rel_err(via_product, P.log_scale, window, log_scale) < 1e-10);
        }
    }
    SECTION("cocycle identity over random splits") {
        std::mt19937_64 rng(43);
        for (int rep = 0; rep < 100; ++rep) {
            auto c = amo_cocycle(qptest::uniform(rng, -2, 2), qptest::uniform(rng, -3, 3));
            TorusPoint th0 = qptest::random_point(rng, 1);
            long m = 1 + (long)(rng() % 80), n = 1 + (long)(rng() % 80);
            auto full = iterate(c, th0, m + n);
            auto head = iterate(c, th0, m);
            auto tail = iterate(c, c.alpha().advance(th0, m), n);
            Eigen::MatrixXcd combined = tail.m * head.m;
            CHECK(scaled_rel_err(Eigen::VectorXcd(Eigen::Map<Eigen::VectorXcd>(
                                     combined.data(), combined.size())),
                                 tail.log_scale + head.log_scale,
                                 Eigen::VectorXcd(Eigen::Map<Eigen::VectorXcd>(full.m.data(),
                                                                               full.m.size())),
                                 full.log_scale) < 1e-9);
        }
    }
    SECTION("determinant magnitude is conserved") {
        std::mt19937_64 rng(47);
        for (int rep = 0; rep < 10; ++rep) {
            int l = 1 + (int)(rng() % 2);
            CocycleSampler c(qptest::random_trig_poly(rng, l), qptest::random_symbol(rng, 1, 3),
                             qptest::uniform(rng, -1, 1), Complex(qptest::uniform(rng, -2, 2)),
                             Frequency::golden());
            auto P = iterate(c, qptest::random_point(rng, 1), 500);
            CHECK(std::exp(P.log_abs_det / 500.0) == Catch::Approx(1.0).epsilon(1e-8));
        }
        // the factored form reproduces the determinant while it is representable
        auto c = amo_cocycle(0.9, 0.5);
        auto P = iterate(c, {0.05}, 20);
        double log_det = std::log(std::abs(P.m.determinant())) + 2.0 * P.log_scale;
        CHECK(std::abs(log_det - P.log_abs_det) < 1e-8);
    }
}

TEST_CASE("lyapunov spectrum") {
    SECTION("constant hyperbolic matrix") {
        auto c = amo_cocycle(0.0, 3.0);
        auto rep = lyapunov_spectrum(c, 200000, equidistributed_phases(1, 4));
        double expect = std::log((3.0 + std::sqrt(5.0)) / 2.0);
        CHECK(rep.exponents[0] == Catch::Approx(expect).margin(1e-6));
        CHECK(rep.exponents[1] == Catch::Approx(-expect).margin(1e-6));
    }
    SECTION("constant elliptic matrix") {
        for (double E : {0.0, 1.0, -1.4}) {
            auto rep = lyapunov_spectrum(amo_cocycle(0.0, E), 100000, equidistributed_phases(1, 2));
            CHECK(std::abs(rep.exponents[0]) < 1e-4);
            CHECK(std::abs(rep.exponents[1]) < 1e-4);
        }
    }
    SECTION("large-coupling AMO exponent, two-run agreement") {
        auto phases = equidistributed_phases(1, 8);
        auto c = amo_cocycle(5.0, 0.8);
        auto r1 = lyapunov_spectrum(c, 100000, phases);
        auto r2 = lyapunov_spectrum(c, 200000, phases);
        CHECK(std::abs(r1.exponents[0] - r2.exponents[0]) < 0.01);
        CHECK(r1.exponents[0] == Catch::Approx(std::log(5.0)).margin(0.05));
    }
    SECTION("symplectic pairing and zero sum for a degree-2 polynomial") {
        std::mt19937_64 rng(53);
        CocycleSampler c(qptest::random_trig_poly(rng, 2), qptest::random_symbol(rng, 1, 3), 0.5,
                         Complex(0.9), Frequency::golden());
        auto rep = lyapunov_spectrum(c, 50000, equidistributed_phases(1, 8));
        double se = 0;
        for (double s : rep.stderrs) se = std::max(se, s);
        CHECK(std::abs(rep.sum()) < 3.0 * std::max(se, 1e-9) + 1e-9);
        for (int i = 0; i < 2; ++i) {
            double lam = rep.exponents[i];
            double mirror = -rep.exponents[3 - i];
            CHECK(std::abs(lam - mirror) < 3.0 * (rep.stderrs[i] + rep.stderrs[3 - i]) + 1e-3);
        }
    }
    SECTION("preconditions") {
        CHECK_THROWS_AS(lyapunov_spectrum(amo_cocycle(0, 0), 100, equidistributed_phases(1, 2)),
                        std::invalid_argument);
    }
}

TEST_CASE("rotation number") {
    SECTION("constant elliptic rotation") {
        double rho = 0.2;
        auto c = amo_cocycle(0.0, 2.0 * std::cos(kTwoPi * rho));
        CHECK(rotation_number(c, 100000, equidistributed_phases(1, 2)) ==
              Catch::Approx(rho).margin(1e-4));
    }
    SECTION("hyperbolic: no winding far below the spectrum") {
        auto c = amo_cocycle(0.0, -5.0);
        CHECK(rotation_number(c, 50000, equidistributed_phases(1, 2)) ==
              Catch::Approx(0.5).margin(1e-4));
        auto cpos = amo_cocycle(0.0, 5.0);
        CHECK(rotation_number(cpos, 50000, equidistributed_phases(1, 2)) ==
              Catch::Approx(0.0).margin(1e-4));
    }
    SECTION("rejected beyond the 2x2 case") {
        std::mt19937_64 rng(59);
        CocycleSampler c(qptest::random_trig_poly(rng, 2), DecayingSymbol::cosine(), 0.1,
                         Complex(0.0), Frequency::golden());
        CHECK_THROWS_AS(rotation_number(c, 2000, equidistributed_phases(1, 1)),
                        std::invalid_argument);
    }
    SECTION("gap labelling against the dual IDS at desk scale") {
        const double eps = 0.2;
        DualSpec spec{TrigPoly::cosine(), DecayingSymbol::cosine(), eps, Frequency::golden(),
                      {0.0}, 400};
        auto ev = eigenvalues_of(assemble_dual(spec));
        double E = ev(ev.size() / 2);
        std::vector<TorusPoint> thetas;
        for (int i = 0; i < 12; ++i) thetas.push_back({i / 12.0});
        auto ids = empirical_ids_dual(spec, {E}, thetas);
        double rho = rotation_number(amo_cocycle(eps, E), 100000, equidistributed_phases(1, 8));
        CHECK(rho == Catch::Approx((1.0 - ids.values[0]) / 2.0).margin(0.01));
    }
}

TEST_CASE("symplectic structure") {
    std::mt19937_64 rng(61);
    SECTION("2x2 real cocycle is already in the group") {
        auto c = amo_cocycle(0.8, 1.1);
        std::vector<TorusPoint> thetas;
        for (int i = 0; i < 1000; ++i) thetas.push_back(qptest::random_point(rng, 1));
        auto def = symplectic_defect(c, thetas);
        CHECK(def.basis_found);
        CHECK(def.conjugated < 1e-10);
        CHECK(def.raw < 1e-10);
    }
    SECTION("conserved form is conserved along solutions") {
        TrigPoly v = qptest::random_trig_poly(rng, 2);
        DecayingSymbol w = qptest::random_symbol(rng, 1, 3);
        CocycleSampler c(v, w, 0.7, Complex(0.33), Frequency::golden());
        Eigen::MatrixXcd F = conserved_form(v);
        TorusPoint th{0.12};
        Eigen::MatrixXcd A = c(th);
        CHECK((A.adjoint() * F * A - F).norm() < 1e-12);
    }
    SECTION("degree-2 conjugated defect vanishes for real energy") {
        for (int rep = 0; rep < 5; ++rep) {
            TrigPoly v = qptest::random_trig_poly(rng, 2);
            CocycleSampler c(v, qptest::random_symbol(rng, 1, 3), 0.4, Complex(-0.6),
                             Frequency::golden());
            std::vector<TorusPoint> thetas;
            for (int i = 0; i < 100; ++i) thetas.push_back(qptest::random_point(rng, 1));
            auto def = symplectic_defect(c, thetas);
            if (def.basis_found) {
                CHECK(def.conjugated < 1e-10);
            }
        }
    }
    SECTION("non-real energy breaks the structure") {
        CocycleSampler c(TrigPoly::cosine(), DecayingSymbol::cosine(), 0.5, Complex(1.0, 0.4),
                         Frequency::golden());
        std::vector<TorusPoint> thetas{{0.1}, {0.5}, {0.9}};
        auto def = symplectic_defect(c, thetas);
        CHECK(def.conjugated > 1e-3);
    }
}
