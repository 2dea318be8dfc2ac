#pragma once

// The end-to-end rigidity experiment: diagonalize a long-range truncation,
// select well-localized interior eigenpairs, reduce the dual cocycle at
// each eigenvalue, detect the phase alignment rho_j - x = <k, alpha> mod Z,
// and check the forced exponential decay against the Fourier radius of the
// computed conjugacy.
//
// Each eigenpair is recentred at its localization hump before the duality
// step: the eigenvector translated by -m* is an eigenvector of the operator
// at phase x + <m*, alpha>, so the expected alignment mode k stays small
// regardless of where the state sits in the box.

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "qplab/decay_fit.hpp"
#include "qplab/duality.hpp"
#include "qplab/lattice.hpp"
#include "qplab/parallel.hpp"
#include "qplab/reduce.hpp"
#include "qplab/resonance.hpp"

namespace qplab {

// Pass thresholds are configuration data; the shipped defaults are the
// frozen values of the first verified run and act as regression bounds.
struct ExperimentThresholds {
    double select_residual = 1e-6;   // stage-2 eigenpair gate
    double newton_tol = 1e-8;        // solver target
    double conj_accept = 1e-6;       // stage-3 gate on the conjugacy residual
    double match_tol = 1e-4;         // end-to-end resonance defect and |Im rho|
    double decay_margin = 0.05;      // rate >= 2 pi h_hat(B) - margin
    double min_match_fraction = 0.8; // pass bar over selected eigenpairs
};

struct ExperimentConfig {
    TrigPoly v = TrigPoly::cosine();
    DecayingSymbol w = DecayingSymbol::cosine();
    double epsilon = 0.0;
    Frequency alpha = Frequency::golden();
    double x = 0.0;
    int N = 120;
    int K = 32;
    double divisor_floor = 1e-6;
    int k_max = 50;
    int grid_points = 256;
    ExperimentThresholds thresholds;
    std::uint64_t seed = 12345;
    int jobs = 1;
    int max_eigenpairs = 0;  // 0 = every selected pair
};

struct EigenpairVerdict {
    double E = 0;
    MultiIndex center;
    double eig_residual = 0;
    double x_loc = 0;         // recentred phase
    bool selected = false;

    bool reduced = false;     // stage 3
    double conj_residual = 0;
    double condition = 0;
    int newton_iterations = 0;
    bool used_continuation = false;
    std::string failure;
    std::vector<Complex> rho;

    bool checked = false;     // stage 4
    std::vector<ResonanceMatch> matches;
    std::vector<ModeProfile> profiles;
    double transport_defect = 0;
    bool matched = false;

    DecayVerdict decay;       // stage 5
    bool passed = false;      // matched && decay pass
};

struct ExperimentReport {
    int N = 0, K = 0;
    double epsilon = 0, x = 0;
    std::uint64_t seed = 0;
    ExperimentThresholds thresholds;
    std::vector<EigenpairVerdict> pairs;  // every selected pair, ordered by E
    long spectrum_size = 0;
    int selected = 0, reduced = 0, matched = 0, passed = 0;
    double match_fraction = 0;   // matched / selected
    bool pass = false;           // fraction >= bar and selected > 0
};

// Recentre the eigenvector at its localization hump; sites pushed past the
// box edge carry no visible mass for interior-centered localized states.
inline LatticeVector recentre(const Eigen::VectorXcd& u, const Box& box,
                              const MultiIndex& center) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(box.cardinality());
    for (long i = 0; i < box.cardinality(); ++i) {
        MultiIndex shifted = box.site(i);
        for (int a = 0; a < box.d; ++a) shifted[a] += center[a];
        long j = box.index(shifted);
        if (j >= 0) out((Eigen::Index)i) = u((Eigen::Index)j);
    }
    double n = out.norm();
    if (n > 0) out /= n;
    return {box, std::move(out)};
}

inline ExperimentReport run_rigidity_experiment(const ExperimentConfig& cfg) {
    ExperimentReport rep;
    rep.N = cfg.N;
    rep.K = cfg.K;
    rep.epsilon = cfg.epsilon;
    rep.x = wrap_unit(cfg.x);
    rep.seed = cfg.seed;
    rep.thresholds = cfg.thresholds;

    LongRangeSpec spec{cfg.v, cfg.w, cfg.epsilon, cfg.alpha, rep.x, cfg.N};
    auto op = assemble_long_range(spec);
    auto pairs = diagonalize(op);
    rep.spectrum_size = (long)pairs.size();

    // stage 2: residual gate and interior centering (middle half of the box)
    std::vector<std::size_t> chosen;
    for (std::size_t j = 0; j < pairs.size(); ++j) {
        if (pairs[j].residual >= cfg.thresholds.select_residual) continue;
        MultiIndex c = localization_center(pairs[j].u, op.box);
        if (norm_inf(c) > cfg.N / 2) continue;
        chosen.push_back(j);
        if (cfg.max_eigenpairs > 0 && (int)chosen.size() >= cfg.max_eigenpairs) break;
    }
    rep.selected = (int)chosen.size();
    rep.pairs.resize(chosen.size());
    if (chosen.empty()) {
        rep.pass = false;
        return rep;
    }

    const DecayingSymbol w_dual = cfg.w.reflected();
    const int boundary_margin = std::max(cfg.v.degree(), cfg.w.radius());

    parallel_for(cfg.jobs, (long)chosen.size(), [&](long slot) {
        const EigenPair& ep = pairs[chosen[(std::size_t)slot]];
        EigenpairVerdict& v = rep.pairs[(std::size_t)slot];
        v.E = ep.E;
        v.eig_residual = ep.residual;
        v.center = localization_center(ep.u, op.box);
        v.selected = true;
        v.x_loc = wrap_unit(rep.x + cfg.alpha.pairing(v.center));
        LatticeVector u_loc = recentre(ep.u, op.box, v.center);

        // stage 3: reduce the dual cocycle at this energy
        CocycleSampler cocycle(cfg.v, w_dual, cfg.epsilon, Complex(ep.E), cfg.alpha);
        NewtonOptions nopt;
        nopt.K = cfg.K;
        nopt.tol = cfg.thresholds.newton_tol;
        nopt.divisor_floor = cfg.divisor_floor;
        auto conj = newton_reduce(cocycle, nopt);
        if (!conj.converged) {
            auto retry = reduce_with_continuation(cocycle, nopt);
            if (retry.converged) {
                conj = retry;
                v.used_continuation = true;
            }
        }
        v.conj_residual = conj.residual;
        v.condition = conj.condition;
        v.newton_iterations = conj.iterations;
        v.failure = conj.failure;
        v.rho = conj.rho;
        v.reduced = conj.converged && conj.residual < cfg.thresholds.conj_accept;
        if (!v.reduced) return;

        // stage 4: resonance + mode purity at the recentred phase
        RigidityOptions ropt;
        ropt.k_max = cfg.k_max;
        ropt.match_tol = cfg.thresholds.match_tol;
        ropt.conj_tol = cfg.thresholds.conj_accept;
        ropt.eig_tol = cfg.thresholds.select_residual;
        ropt.decay_margin = cfg.thresholds.decay_margin;
        ropt.grid_points = cfg.grid_points;
        ropt.boundary_margin = boundary_margin;
        auto rc = rigidity_check(conj, u_loc, ep.residual, v.x_loc, cfg.alpha,
                                 matrix_field(cocycle), ropt);
        if (rc.aborted) {
            v.failure = rc.diagnostic;
            return;
        }
        v.checked = true;
        v.matches = rc.matches;
        v.profiles = rc.profiles;
        v.transport_defect = rc.transport_defect;
        v.matched = !rc.matches.empty();

        // stage 5: decay verdict (already computed against 2 pi h_hat(B))
        v.decay = rc.decay;
        v.passed = v.matched && v.decay.pass;
    });

    for (const auto& v : rep.pairs) {
        rep.reduced += v.reduced ? 1 : 0;
        rep.matched += v.matched ? 1 : 0;
        rep.passed += v.passed ? 1 : 0;
    }
    rep.match_fraction = (double)rep.matched / (double)rep.selected;
    rep.pass = rep.match_fraction >= cfg.thresholds.min_match_fraction;
    return rep;
}

}  // namespace qplab
