#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "qplab/duality.hpp"
#include "qplab/lattice.hpp"
#include "support/oracle_sturm.hpp"
#include "support/test_rng.hpp"

using namespace qplab;

namespace {

LongRangeSpec amo_dual_spec(double eps, double x, int N) {
    return {TrigPoly::cosine(), DecayingSymbol::cosine(), eps, Frequency::golden(), x, N};
}

}  // namespace

TEST_CASE("long-range assembly") {
    SECTION("eps = 0 is the multiplication operator") {
        auto spec = amo_dual_spec(0.0, 0.2, 6);
        auto op = assemble_long_range(spec);
        for (long i = 0; i < op.box.cardinality(); ++i) {
            MultiIndex n = op.box.site(i);
            CHECK(op.H(i, i).real() ==
                  Catch::Approx(spec.v.evaluate(spec.x + spec.alpha.pairing(n))));
            for (long j = 0; j < op.box.cardinality(); ++j)
                if (i != j) CHECK(std::abs(op.H(i, j)) == 0.0);
        }
    }
    SECTION("AMO shape: tridiagonal, off-diagonal eps") {
        auto op = assemble_long_range(amo_dual_spec(0.7, 0.0, 8));
        for (long i = 0; i + 1 < op.box.cardinality(); ++i) {
            CHECK(op.H(i, i + 1).real() == Catch::Approx(0.7));
            CHECK(op.H(i + 1, i).real() == Catch::Approx(0.7));
            if (i + 2 < op.box.cardinality()) CHECK(std::abs(op.H(i, i + 2)) == 0.0);
        }
        CHECK(op.H(0, 0).real() == Catch::Approx(2.0 * std::cos(kTwoPi * (-8 * kGoldenMean))));
    }
    SECTION("constant symbol shifts the diagonal") {
        LongRangeSpec spec{TrigPoly::cosine(), DecayingSymbol::constant(1.0), 0.3,
                           Frequency::golden(), 0.1, 5};
        auto op = assemble_long_range(spec);
        for (long i = 0; i < op.box.cardinality(); ++i) {
            MultiIndex n = op.box.site(i);
            CHECK(op.H(i, i).real() ==
                  Catch::Approx(0.3 + spec.v.evaluate(spec.x + spec.alpha.pairing(n))));
        }
    }
    SECTION("box below hopping range rejected") {
        std::mt19937_64 rng(3);
        LongRangeSpec spec{TrigPoly::cosine(), qptest::random_symbol(rng, 1, 4), 0.1,
                           Frequency::golden(), 0.0, 3};
        CHECK_THROWS_AS(assemble_long_range(spec), std::invalid_argument);
    }
    SECTION("two-dimensional assembly is Hermitian") {
        std::mt19937_64 rng(9);
        LongRangeSpec spec{qptest::random_trig_poly(rng, 2), qptest::random_symbol(rng, 2, 2),
                           0.4, Frequency({kGoldenMean, std::sqrt(2.0) - 1.0}), 0.3, 4};
        auto op = assemble_long_range(spec);
        CHECK(hermiticity_defect(op.H) < 1e-12);
    }
}

TEST_CASE("dual assembly") {
    SECTION("free band: Dirichlet Laplacian spectrum") {
        const int M = 10;
        DualSpec spec{TrigPoly::cosine(), DecayingSymbol::cosine(), 0.0, Frequency::golden(),
                      {0.0}, M};
        auto op = assemble_dual(spec);
        auto ev = eigenvalues_of(op);
        const int n = 2 * M + 1;
        for (int j = 1; j <= n; ++j) {
            double expect = 2.0 * std::cos(M_PI * j / (n + 1.0));
            CHECK(ev(n - j) == Catch::Approx(expect).margin(1e-10));
        }
    }
    SECTION("degree-2 polynomial gives a pentadiagonal band") {
        std::mt19937_64 rng(7);
        TrigPoly v = qptest::random_trig_poly(rng, 2);
        DualSpec spec{v, DecayingSymbol::cosine(), 0.2, Frequency::golden(), {0.1}, 6};
        auto op = assemble_dual(spec);
        for (long i = 0; i < op.box.cardinality(); ++i)
            for (long j = 0; j < op.box.cardinality(); ++j) {
                if (std::abs(i - j) > 2) CHECK(std::abs(op.H(i, j)) == 0.0);
                if (i - j == 2) CHECK(std::abs(op.H(i, j) - v.coeff(-2)) < 1e-15);
                if (j - i == 2) CHECK(std::abs(op.H(i, j) - v.coeff(2)) < 1e-15);
            }
    }
    SECTION("AMO matrix") {
        DualSpec spec{TrigPoly::cosine(), DecayingSymbol::cosine(), 0.6, Frequency::golden(),
                      {0.2}, 5};
        auto op = assemble_dual(spec);
        for (long i = 0; i < op.box.cardinality(); ++i) {
            int n = (int)i - 5;
            CHECK(op.H(i, i).real() ==
                  Catch::Approx(0.6 * 2.0 * std::cos(kTwoPi * wrap_unit(0.2 + n * kGoldenMean))));
            if (i + 1 < op.box.cardinality()) CHECK(op.H(i, i + 1).real() == 1.0);
        }
    }
    SECTION("interval below band width rejected") {
        std::mt19937_64 rng(13);
        DualSpec spec{qptest::random_trig_poly(rng, 3), DecayingSymbol::cosine(), 0.1,
                      Frequency::golden(), {0.0}, 2};
        CHECK_THROWS_AS(assemble_dual(spec), std::invalid_argument);
    }
}

TEST_CASE("diagonalize") {
    SECTION("2x2 flip") {
        Eigen::MatrixXcd H(2, 2);
        H << 0, 1, 1, 0;
        auto pairs = diagonalize(H);
        REQUIRE(pairs.size() == 2);
        CHECK(pairs[0].E == Catch::Approx(-1.0));
        CHECK(pairs[1].E == Catch::Approx(1.0));
        CHECK(pairs[0].residual < 1e-14);
    }
    SECTION("diagonal input reproduced exactly") {
        auto spec = amo_dual_spec(0.0, 0.37, 12);
        auto op = assemble_long_range(spec);
        auto pairs = diagonalize(op);
        std::vector<double> diag;
        for (long i = 0; i < op.box.cardinality(); ++i) diag.push_back(op.H(i, i).real());
        std::sort(diag.begin(), diag.end());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            CHECK(pairs[i].E == Catch::Approx(diag[i]).margin(1e-14));
            CHECK(pairs[i].u.norm() == Catch::Approx(1.0));
            CHECK(pairs[i].residual < 1e-12);
        }
    }
    SECTION("random Hermitian matches the Sturm bisection oracle") {
        std::mt19937_64 rng(21);
        const int n = 50;
        Eigen::MatrixXcd H(n, n);
        for (int i = 0; i < n; ++i) {
            H(i, i) = Complex(qptest::uniform(rng, -2, 2), 0);
            for (int j = i + 1; j < n; ++j) {
                H(i, j) = qptest::random_complex(rng);
                H(j, i) = std::conj(H(i, j));
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
        auto oracle = qptest::sturm_eigenvalues(H, 1e-11);
        for (int i = 0; i < n; ++i) CHECK(es.eigenvalues()(i) == Catch::Approx(oracle[i]).margin(1e-8));
    }
    SECTION("non-Hermitian rejected") {
        Eigen::MatrixXcd H(2, 2);
        H << 0, 1, 2, 0;
        CHECK_THROWS_AS(diagonalize(H), std::invalid_argument);
    }
    SECTION("eigen residual contract on an AMO-type box") {
        auto op = assemble_long_range(amo_dual_spec(0.2, 0.13, 40));
        auto pairs = diagonalize(op);
        for (const auto& p : pairs) {
            CHECK((op.H * p.u - p.E * p.u).norm() < 1e-8);
            CHECK(p.u.norm() == Catch::Approx(1.0));
        }
        for (std::size_t i = 1; i < pairs.size(); ++i) CHECK(pairs[i - 1].E <= pairs[i].E);
    }
}

TEST_CASE("spectral weights") {
    SECTION("diagonal matrix concentrates on one eigenvalue") {
        auto op = assemble_long_range(amo_dual_spec(0.0, 0.4, 8));
        auto pairs = diagonalize(op);
        MultiIndex p{3};
        auto w = spectral_weights(pairs, op.box, p);
        double expect = TrigPoly::cosine().evaluate(0.4 + 3 * kGoldenMean);
        double sum = 0;
        for (auto [E, wt] : w) {
            sum += wt;
            if (std::abs(E - expect) > 1e-9) CHECK(wt < 1e-18);
        }
        CHECK(sum == Catch::Approx(1.0).epsilon(1e-10));
    }
    SECTION("completeness on a 201-site AMO box") {
        auto op = assemble_long_range(amo_dual_spec(0.2, 0.05, 100));
        auto pairs = diagonalize(op);
        for (int site : {-50, 0, 77}) {
            auto w = spectral_weights(pairs, op.box, {site});
            double sum = 0;
            for (auto [E, wt] : w) sum += wt;
            CHECK(sum == Catch::Approx(1.0).epsilon(1e-10));
        }
        CHECK_THROWS_AS(spectral_weights(pairs, op.box, {101}), std::invalid_argument);
    }
}

TEST_CASE("empirical IDS") {
    SECTION("free case matches the arcsine law") {
        auto spec = amo_dual_spec(0.0, 0.0, 400);
        std::vector<double> grid;
        for (double E = -1.9; E <= 1.9; E += 0.05) grid.push_back(E);
        std::vector<double> phases;
        for (int p = 0; p < 10; ++p) phases.push_back(p / 10.0);
        auto ids = empirical_ids(spec, grid, phases);
        for (std::size_t g = 0; g < ids.energies.size(); ++g) {
            double expect = 1.0 - std::acos(ids.energies[g] / 2.0) / M_PI;
            CHECK(ids.values[g] == Catch::Approx(expect).margin(0.01));
        }
    }
    SECTION("limits and monotonicity") {
        auto spec = amo_dual_spec(0.3, 0.11, 60);
        std::vector<double> grid{-10.0, -2.0, 0.0, 2.0, 10.0};
        auto ids = empirical_ids(spec, grid, {0.0, 0.5});
        CHECK(ids.values.front() == 0.0);
        CHECK(ids.values.back() == 1.0);
        for (std::size_t g = 1; g < ids.values.size(); ++g)
            CHECK(ids.values[g] >= ids.values[g - 1]);
        CHECK_THROWS_AS(empirical_ids(spec, grid, {}), std::invalid_argument);
    }
}

TEST_CASE("Dirichlet IDS stability under box doubling", "[.slow]") {
    std::vector<double> grid;
    for (double E = -2.6; E <= 2.6; E += 0.01) grid.push_back(E);
    std::vector<double> phases{0.0, 0.25, 0.5, 0.75};
    double prev_sup = -1;
    for (int N : {250, 500}) {
        auto idsN = empirical_ids(amo_dual_spec(0.2, 0.0, N), grid, phases);
        auto ids2N = empirical_ids(amo_dual_spec(0.2, 0.0, 2 * N), grid, phases);
        double sup = 0;
        for (std::size_t g = 0; g < grid.size(); ++g)
            sup = std::max(sup, std::abs(idsN.values[g] - ids2N.values[g]));
        CHECK(sup <= 10.0 / N);
        if (prev_sup >= 0) CHECK(sup <= prev_sup + 1e-12);
        prev_sup = sup;
    }
}

TEST_CASE("AMO duality scaling of truncated spectra", "[.slow]") {
    // spectrum(lambda) ~ lambda * spectrum(1/lambda) at lambda = 3; isolated
    // boundary-state eigenvalues inside gaps are filtered out on both sides
    const int M = 250;
    const double lambda = 3.0;
    std::vector<TorusPoint> thetas;
    for (int i = 0; i < 50; ++i) thetas.push_back({i / 50.0});
    DualFamily big{{TrigPoly::cosine(), DecayingSymbol::cosine(), lambda, Frequency::golden(),
                    {0.0}, M},
                   thetas,
                   1.0};
    DualFamily scaled{{TrigPoly::cosine(), DecayingSymbol::cosine(), 1.0 / lambda,
                       Frequency::golden(), {0.0}, M},
                      thetas,
                      lambda};
    auto cmp = spectra_compare(big, scaled);
    CHECK(cmp.hausdorff < 0.05);
}
