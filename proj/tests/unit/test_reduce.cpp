#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "qplab/cohomology.hpp"
#include "qplab/lattice.hpp"
#include "qplab/reduce.hpp"
#include "qplab/resonance.hpp"
#include "support/manufactured.hpp"
#include "support/test_rng.hpp"

using namespace qplab;

TEST_CASE("cohomological solve") {
    Frequency alpha = Frequency::golden();
    SECTION("single mode division") {
        FourierSeries<Complex> rhs(1, 4);
        rhs.set({1}, Complex(1));
        auto sol = cohomological_solve(Complex(0), alpha, rhs, 1e-10);
        CHECK(sol.resonant.empty());
        Complex expect = Complex(1) / (std::polar(1.0, kTwoPi * alpha[0]) - Complex(1));
        CHECK(std::abs(sol.c.coeff({1}) - expect) < 1e-14);
    }
    SECTION("exact small divisor reported resonant") {
        FourierSeries<Complex> rhs(1, 4);
        rhs.set({3}, Complex(2, 1));
        rhs.set({1}, Complex(1));
        auto sol = cohomological_solve(Complex(3 * alpha[0]), alpha, rhs, 1e-10);
        REQUIRE(sol.resonant.size() == 1);
        CHECK(sol.resonant[0].k == MultiIndex{3});
        CHECK(std::abs(sol.c.coeff({3})) == 0.0);
        CHECK(std::abs(sol.c.coeff({1})) > 0.0);
    }
    SECTION("substitution satisfies the difference relation off resonances") {
        std::mt19937_64 rng(71);
        const int K = 32;
        FourierSeries<Complex> rhs(1, K);
        for (int k = -K; k <= K; ++k)
            rhs.set({k}, qptest::random_complex(rng) * std::exp(-0.2 * std::abs(k)));
        Complex beta(0.083, 0.0);
        auto sol = cohomological_solve(beta, alpha, rhs, 1e-6);
        Complex mult = std::exp(Complex(0, 1) * kTwoPi * beta);
        double worst = 0;
        for (int g = 0; g < 257; ++g) {
            TorusPoint th{g / 257.0};
            Complex olhs = sol.c.evaluate(alpha.advance(th, 1)) - mult * sol.c.evaluate(th);
            Complex orhs = rhs.evaluate(th);
            for (const auto& rm : sol.resonant)
                orhs -= rm.rhs_coeff * std::polar(1.0, kTwoPi * dot(rm.k, th));
            worst = std::max(worst, std::abs(olhs - orhs));
        }
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("newton reduction, constant cocycle") {
    // eps = 0: one step, constant eigenvector matrix, machine residual
    CocycleSampler c(TrigPoly::cosine(), DecayingSymbol::cosine(), 0.0, Complex(0.9),
                     Frequency::golden());
    NewtonOptions opt;
    opt.K = 8;
    opt.tol = 1e-12;
    auto conj = newton_reduce(c, opt);
    REQUIRE(conj.converged);
    CHECK(conj.iterations <= 1);
    CHECK(conj.residual < 1e-12);
    // all mass on the constant mode
    double off = 0;
    for (const auto& [k, m] : conj.B.coeffs())
        if (!is_zero(k)) off = std::max(off, m.norm());
    CHECK(off < 1e-12);
    // rho match the constant-matrix eigenvalues e^{+-2 pi i rho0}
    double rho0 = std::acos(0.45) / kTwoPi;
    CHECK(conj.rho[0].real() == Catch::Approx(rho0).margin(1e-10));
    CHECK(conj.rho[1].real() == Catch::Approx(1.0 - rho0).margin(1e-10));
}

TEST_CASE("newton reduction recovers manufactured conjugacies") {
    for (auto [seed, l] : std::vector<std::pair<std::uint64_t, int>>{{101, 1}, {202, 1}, {303, 2}}) {
        auto made = qptest::make_conjugated_cocycle(seed, l, 24);
        NewtonOptions opt;
        opt.K = 24;
        opt.tol = 1e-9;
        auto conj = newton_reduce(made.A, made.alpha, opt);
        INFO("seed " << seed << " l " << l << " failure '" << conj.failure << "'");
        REQUIRE(conj.converged);
        CHECK(conj.iterations <= (l == 1 ? 12 : 25));
        CHECK(conj.residual < 1e-9);

        // rho match rho_true modulo permutation and integer shifts
        std::vector<bool> used(conj.rho.size(), false);
        for (Complex rt : made.rho_true) {
            double best = 1e300;
            std::size_t arg = 0;
            for (std::size_t j = 0; j < conj.rho.size(); ++j) {
                if (used[j]) continue;
                double d = torus_dist(conj.rho[j].real() - rt.real()) +
                           std::abs(conj.rho[j].imag() - rt.imag());
                if (d < best) { best = d; arg = j; }
            }
            used[arg] = true;
            CHECK(best < 1e-8);
        }

        // quadratic-like tail: r_{i+1} <= C r_i^{1.5} over the last contracting
        // steps above the truncation floor (below it the residual measures the
        // mode cutoff, not the iteration)
        const auto& h = conj.residual_history;
        int checked = 0;
        for (std::size_t i = h.size(); i-- > 1 && checked < 3;) {
            if (h[i - 1] < 1e-7) continue;
            CHECK(h[i] <= 1e3 * std::pow(h[i - 1], 1.5));
            ++checked;
        }
        CHECK(checked >= 2);
    }
}

TEST_CASE("newton reduction on the subcritical AMO dual cocycle") {
    const double eps = 0.2;
    Frequency alpha = Frequency::golden();
    DualSpec dual{TrigPoly::cosine(), DecayingSymbol::cosine(), eps, alpha, {0.0}, 400};
    auto ev = eigenvalues_of(assemble_dual(dual));
    double E = ev(ev.size() / 2);

    CocycleSampler c(TrigPoly::cosine(), DecayingSymbol::cosine(), eps, Complex(E), alpha);
    NewtonOptions opt;
    opt.K = 64;
    opt.tol = 1e-8;
    auto conj = newton_reduce(c, opt);
    REQUIRE(conj.converged);
    CHECK(conj.residual < 1e-6);
    CHECK(std::abs(conj.rho[0].imag()) < 1e-6);

    // truncation refinement leaves the exponents in place
    NewtonOptions opt2 = opt;
    opt2.K = 96;
    auto conj2 = newton_reduce(c, opt2);
    REQUIRE(conj2.converged);
    double d01 = torus_dist(conj.rho[0].real() - conj2.rho[0].real());
    CHECK(d01 < 1e-6);
}

TEST_CASE("newton failure paths") {
    SECTION("coincident initial exponents") {
        CocycleSampler c(TrigPoly::cosine(), DecayingSymbol::cosine(), 0.1, Complex(0.5),
                         Frequency::golden());
        NewtonOptions opt;
        opt.K = 8;
        opt.rho0 = {Complex(0.25), Complex(0.25)};
        auto conj = newton_reduce(c, opt);
        CHECK_FALSE(conj.converged);
        CHECK(conj.failure.find("non-diagonalizable") != std::string::npos);
    }
    SECTION("iteration budget reported") {
        // strongly coupled cocycle far from reducible at this K
        CocycleSampler c(TrigPoly::cosine(), DecayingSymbol::cosine(), 6.0, Complex(0.3),
                         Frequency::golden());
        NewtonOptions opt;
        opt.K = 8;
        opt.max_iters = 4;
        opt.tol = 1e-12;
        auto conj = newton_reduce(c, opt);
        CHECK_FALSE(conj.converged);
        CHECK_FALSE(conj.failure.empty());
        CHECK_FALSE(conj.residual_history.empty());
    }
}

TEST_CASE("resonance detector") {
    Frequency alpha = Frequency::golden();
    SECTION("direct hits") {
        double x = 0.31;
        auto m0 = resonance_detect({Complex(x)}, x, alpha, 10, 1e-9);
        REQUIRE(m0.size() == 1);
        CHECK(m0[0].k == MultiIndex{0});
        CHECK(m0[0].defect == 0.0);

        auto m1 = resonance_detect({Complex(wrap_unit(x + alpha[0]))}, x, alpha, 10, 1e-9);
        REQUIRE(m1.size() == 1);
        CHECK(m1[0].k == MultiIndex{1});
    }
    SECTION("generic offset finds nothing") {
        auto m = resonance_detect({Complex(wrap_unit(0.3 + 0.1))}, 0.1, alpha, 50, 1e-9);
        CHECK(m.empty());
        // brute-force confirmation that the least defect is far above tolerance
        double least = 1e300;
        for (int k = -50; k <= 50; ++k) least = std::min(least, torus_dist(0.3 - k * alpha[0]));
        CHECK(least > 1e-3);
    }
    SECTION("imaginary part disqualifies") {
        auto m = resonance_detect({Complex(0.31, 0.5)}, 0.31, alpha, 10, 1e-6);
        CHECK(m.empty());
    }
    SECTION("tie-breaks: |k|_1 then lexicographic") {
        Frequency a2({kGoldenMean, std::sqrt(2.0) - 1.0});
        auto m = resonance_detect({Complex(0.5)}, 0.5, a2, 2, 0.75);
        REQUIRE(m.size() >= 3);
        for (std::size_t i = 1; i < m.size(); ++i) {
            int na = norm_one(m[i - 1].k), nb = norm_one(m[i].k);
            CHECK((na < nb || (na == nb && m[i - 1].k < m[i].k)));
        }
        CHECK(m[0].k == MultiIndex{0, 0});
    }
    SECTION("translation covariance in the exponents") {
        std::mt19937_64 rng(83);
        for (int rep = 0; rep < 20; ++rep) {
            double x = qptest::uniform(rng, 0, 1);
            std::vector<Complex> rho{Complex(qptest::uniform(rng, 0, 1)),
                                     Complex(qptest::uniform(rng, 0, 1))};
            auto base = resonance_detect(rho, x, alpha, 30, 1e-2);
            std::vector<Complex> shifted;
            for (Complex r : rho) shifted.push_back(r + Complex(3.0));
            auto moved = resonance_detect(shifted, x, alpha, 30, 1e-2);
            REQUIRE(base.size() == moved.size());
            for (std::size_t i = 0; i < base.size(); ++i) {
                CHECK(base[i].j == moved[i].j);
                CHECK(base[i].k == moved[i].k);
                CHECK(base[i].defect == Catch::Approx(moved[i].defect).margin(1e-12));
            }
        }
    }
}

TEST_CASE("rigidity check on manufactured rigid cases") {
    for (auto [seed, l, k0] : std::vector<std::tuple<std::uint64_t, int, int>>{
             {11, 1, 3}, {12, 1, -2}, {13, 2, 1}}) {
        auto rigid = qptest::make_rigid_case(seed, l, 24, k0);
        NewtonOptions nopt;
        nopt.K = 24;
        nopt.tol = 1e-9;
        auto conj = newton_reduce(rigid.cocycle.A, rigid.cocycle.alpha, nopt);
        REQUIRE(conj.converged);

        RigidityOptions ropt;
        ropt.match_tol = 1e-8;
        ropt.conj_tol = 1e-8;
        auto out = rigidity_check(conj, rigid.u, 0.0, rigid.x, rigid.cocycle.alpha,
                                  rigid.cocycle.A, ropt);
        REQUIRE_FALSE(out.aborted);
        REQUIRE(out.matches.size() >= 1);
        CHECK(out.matches[0].k == MultiIndex{rigid.k0});
        CHECK(out.matches[0].defect < 1e-8);

        // every nontrivial component carries its mass on one mode
        REQUIRE_FALSE(out.profiles.empty());
        for (const auto& p : out.profiles) CHECK(p.mass_ratio >= 0.99);
        // the planted component dominates and sits at k0
        double top_share = 0;
        MultiIndex top_mode;
        for (const auto& p : out.profiles)
            if (p.mass_share > top_share) { top_share = p.mass_share; top_mode = p.dominant_mode; }
        CHECK(top_mode == MultiIndex{rigid.k0});

        // a perturbed phase finds nothing
        auto off = rigidity_check(conj, rigid.u, 0.0, wrap_unit(rigid.x + 0.137),
                                  rigid.cocycle.alpha, rigid.cocycle.A, ropt);
        CHECK(off.matches.empty());
    }
}

TEST_CASE("gauge covariance of the rigidity data") {
    auto rigid = qptest::make_rigid_case(21, 1, 16, 2);
    NewtonOptions nopt;
    nopt.K = 16;
    nopt.tol = 1e-9;
    auto conj = newton_reduce(rigid.cocycle.A, rigid.cocycle.alpha, nopt);
    REQUIRE(conj.converged);

    // post-compose with a constant diagonal gauge
    ConjugacyData gauged = conj;
    Eigen::Vector2cd dvec(Complex(1.3, 0.4), Complex(0.2, -0.9));
    gauged.B = FourierSeries<Eigen::MatrixXcd>(1, conj.B.truncation());
    for (const auto& [k, c] : conj.B.coeffs()) {
        Eigen::MatrixXcd g = c;
        g.col(0) *= dvec(0);
        g.col(1) *= dvec(1);
        gauged.B.set(k, std::move(g));
    }

    // Lambda is untouched by the gauge: check the conjugacy equation directly
    Frequency alpha = rigid.cocycle.alpha;
    Eigen::MatrixXcd Lam = conj.lambda();
    double worst = 0;
    for (int g = 0; g < 64; ++g) {
        TorusPoint th{g / 64.0};
        Eigen::MatrixXcd lhs = gauged.B.evaluate(alpha.advance(th, 1))
                                   .partialPivLu()
                                   .solve(rigid.cocycle.A.sample(th) * gauged.B.evaluate(th));
        worst = std::max(worst, (lhs - Lam).norm());
    }
    CHECK(worst < 1e-8);

    RigidityOptions ropt;
    ropt.match_tol = 1e-8;
    ropt.conj_tol = 1e-8;
    auto base = rigidity_check(conj, rigid.u, 0.0, rigid.x, alpha, rigid.cocycle.A, ropt);
    auto moved = rigidity_check(gauged, rigid.u, 0.0, rigid.x, alpha, rigid.cocycle.A, ropt);
    REQUIRE(base.matches.size() == moved.matches.size());
    for (std::size_t i = 0; i < base.matches.size(); ++i) {
        CHECK(base.matches[i].j == moved.matches[i].j);
        CHECK(base.matches[i].k == moved.matches[i].k);
        CHECK(base.matches[i].defect == Catch::Approx(moved.matches[i].defect).margin(1e-14));
    }
}

TEST_CASE("conjugacy residual is grid-stable") {
    auto made = qptest::make_conjugated_cocycle(31, 1, 16);
    NewtonOptions opt;
    opt.K = 16;
    opt.tol = 1e-9;
    auto c1 = newton_reduce(made.A, made.alpha, opt);
    REQUIRE(c1.converged);
    // recompute the residual of the returned B on a twice finer grid
    Eigen::MatrixXcd Lam = c1.lambda();
    double fine = 0;
    for (int g = 0; g < 256; ++g) {
        TorusPoint th{g / 256.0};
        Eigen::MatrixXcd lhs = c1.B.evaluate(made.alpha.advance(th, 1))
                                   .partialPivLu()
                                   .solve(made.A.sample(th) * c1.B.evaluate(th));
        fine = std::max(fine, (lhs - Lam).norm());
    }
    CHECK(fine < 10.0 * std::max(c1.residual, 1e-12));
}
