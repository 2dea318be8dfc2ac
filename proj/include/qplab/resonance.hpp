#pragma once

// Resonance detection and the rigidity verdict.
//
// A reduced cocycle with exponents rho and a phase x carrying an eigenpair
// must align: some rho_j - x = <k, alpha> mod Z with Im rho_j = 0, the
// quotient c = B^{-1} W has every nontrivial component concentrated on a
// single Fourier mode, and the eigenvector decays at least at the Fourier
// decay rate of B.

#include <Eigen/Dense>
#include <algorithm>
#include <string>
#include <vector>

#include "qplab/cohomology.hpp"
#include "qplab/decay_fit.hpp"
#include "qplab/duality.hpp"
#include "qplab/reduce.hpp"

namespace qplab {

struct ResonanceMatch {
    int j;          // exponent index, 0-based
    MultiIndex k;
    double defect;  // torus distance of Re rho_j - x - <k, alpha>
    double imag_part;
};

// Exhaustive scan over |k|_inf <= k_max and all exponent indices. Matches
// are ordered by j, then |k|_1, then lexicographic k.
inline std::vector<ResonanceMatch> resonance_detect(const std::vector<Complex>& rho, double x,
                                                    const Frequency& alpha, int k_max,
                                                    double tol) {
    if (tol <= 0) throw std::invalid_argument("resonance_detect: tolerance must be positive");
    std::vector<ResonanceMatch> out;
    for (std::size_t j = 0; j < rho.size(); ++j) {
        if (std::abs(rho[j].imag()) > tol) continue;
        double target = rho[j].real() - x;
        for_each_in_box(alpha.dimension(), k_max, [&](const MultiIndex& k) {
            double defect = torus_dist(target - alpha.pairing(k));
            if (defect <= tol)
                out.push_back({(int)j, k, defect, std::abs(rho[j].imag())});
        });
    }
    std::sort(out.begin(), out.end(), [](const ResonanceMatch& a, const ResonanceMatch& b) {
        if (a.j != b.j) return a.j < b.j;
        int na = norm_one(a.k), nb = norm_one(b.k);
        if (na != nb) return na < nb;
        return a.k < b.k;
    });
    return out;
}

struct ModeProfile {
    int component;     // 0-based index into the 2l components of c
    MultiIndex dominant_mode;
    double mass_ratio;  // fraction of the component's l2 mass on that mode
    double mass_share;  // component mass / total mass of c
};

struct DecayVerdict {
    double fit_rate = 0;
    double r2 = 0;
    double radius_bound = 0;  // 2 pi h_hat(B)
    bool localized = false;
    bool pass = false;        // fit_rate >= radius_bound - margin
};

struct RigidityOutcome {
    bool aborted = false;
    std::string diagnostic;
    std::vector<ResonanceMatch> matches;
    std::vector<ModeProfile> profiles;
    DecayVerdict decay;
    double transport_defect = 0;
};

struct RigidityOptions {
    int k_max = 50;
    double match_tol = 1e-6;
    double conj_tol = 1e-6;       // precondition on the conjugacy residual
    double eig_tol = 1e-6;        // precondition on the eigenpair residual
    double decay_margin = 0.05;
    int grid_points = 256;        // theta grid per axis (power of two)
    double nontrivial_mass = 1e-6;
    int boundary_margin = 2;
};

// Full rigidity verdict for one (conjugacy, eigenpair) pair. The dual state
// vector is built with the centered window so the quotient satisfies
// c(theta + alpha) = e^{2 pi i (rho - x)} c(theta) against the same cocycle
// that B reduces. `dual_field` must be that cocycle (reflected symbol when
// the eigenpair comes from the long-range operator).
inline RigidityOutcome rigidity_check(const ConjugacyData& conj, const LatticeVector& u,
                                      double eig_residual, double x, const Frequency& alpha,
                                      const MatrixField& dual_field,
                                      const RigidityOptions& opt = {}) {
    RigidityOutcome out;
    if (!conj.converged || conj.residual >= opt.conj_tol) {
        out.aborted = true;
        out.diagnostic = "conjugacy residual above tolerance";
        return out;
    }
    if (eig_residual >= opt.eig_tol) {
        out.aborted = true;
        out.diagnostic = "eigenpair residual above tolerance";
        return out;
    }
    if (conj.condition > 1e10) {
        out.aborted = true;
        out.diagnostic = "conjugacy singular on grid (condition beyond 1e10)";
        return out;
    }

    const int d = alpha.dimension();
    const int m = (int)conj.rho.size();
    const int l = m / 2;
    x = wrap_unit(x);
    auto series = state_vector_series(u, x, alpha, l, -l);
    out.transport_defect = transport_defect(series, -l, x, alpha, dual_field, opt.grid_points);

    // c = B^{-1} W on the grid, then back to modes
    TorusGrid grid(d, d == 1 ? opt.grid_points : 16);
    const long total = grid.total();
    std::vector<std::vector<Complex>> comp((std::size_t)m,
                                           std::vector<Complex>(total, Complex(0)));
    for (long g = 0; g < total; ++g) {
        TorusPoint th = grid.point(g);
        Eigen::MatrixXcd Bth = conj.B.evaluate(th);
        Eigen::VectorXcd c = Bth.partialPivLu().solve(series.evaluate(th));
        for (int j = 0; j < m; ++j) comp[(std::size_t)j][g] = c(j);
    }
    double total_mass = 0;
    std::vector<double> mass((std::size_t)m, 0.0);
    std::vector<FourierSeries<Complex>> cser;
    const int Kc = grid.size / 2 - 1;
    for (int j = 0; j < m; ++j) {
        cser.push_back(series_from_grid(grid, comp[(std::size_t)j], Kc));
        mass[(std::size_t)j] = cser.back().sqnorm();
        total_mass += mass[(std::size_t)j];
    }
    for (int j = 0; j < m; ++j) {
        if (total_mass <= 0 || mass[(std::size_t)j] < opt.nontrivial_mass * total_mass) continue;
        MultiIndex kstar;
        double best = -1;
        for (const auto& [k, c] : cser[(std::size_t)j].coeffs()) {
            double a = std::norm(c);
            if (a > best) { best = a; kstar = k; }
        }
        out.profiles.push_back(
            {j, kstar, best / mass[(std::size_t)j], mass[(std::size_t)j] / total_mass});
    }

    out.matches = resonance_detect(conj.rho, x, alpha, opt.k_max, opt.match_tol);

    DecayFit fit = fit_decay(u, opt.boundary_margin);
    out.decay.fit_rate = fit.rate;
    out.decay.r2 = fit.r2;
    out.decay.localized = fit.localized;
    out.decay.radius_bound = kTwoPi * effective_decay_radius(conj.B);
    out.decay.pass = fit.localized && fit.rate >= out.decay.radius_bound - opt.decay_margin;
    return out;
}

}  // namespace qplab
