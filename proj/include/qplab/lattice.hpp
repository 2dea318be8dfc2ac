#pragma once

// Finite truncations of the long-range operator
//     (H u)_n = eps sum_k w_k u_{n+k} + v(x + <n,alpha>) u_n,   n in Z^d,
// on boxes |n|_inf <= N (Dirichlet), and of its banded dual
//     (H^ u)_n = sum_{|k|<=l} v_k u_{n+k} + eps w(theta + n alpha) u_n,  n in Z,
// on intervals |n| <= M. Dense Hermitian diagonalization with residuals
// reported against the untruncated action on interior sites.

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>
#include <vector>

#include "qplab/decaying_symbol.hpp"
#include "qplab/frequency.hpp"
#include "qplab/trig_poly.hpp"

namespace qplab {

// Desk-scale cap on dense diagonalization (d=1: N <= 2000; d=2: N <= 31).
inline constexpr long kMaxDenseCardinality = 4001;

struct Box {
    int d;
    int radius;

    long cardinality() const {
        long t = 1;
        for (int i = 0; i < d; ++i) t *= 2L * radius + 1;
        return t;
    }

    MultiIndex site(long flat) const {
        MultiIndex n(d);
        for (int axis = d - 1; axis >= 0; --axis) {
            n[axis] = (int)(flat % (2L * radius + 1)) - radius;
            flat /= 2L * radius + 1;
        }
        return n;
    }

    long index(const MultiIndex& n) const {
        long flat = 0;
        for (int axis = 0; axis < d; ++axis) {
            if (std::abs(n[axis]) > radius) return -1;
            flat = flat * (2L * radius + 1) + (n[axis] + radius);
        }
        return flat;
    }

    bool contains(const MultiIndex& n) const { return index(n) >= 0; }
    bool is_interior(const MultiIndex& n, int margin) const {
        return norm_inf(n) <= radius - margin;
    }
};

struct LongRangeSpec {
    TrigPoly v;
    DecayingSymbol w;
    double epsilon;
    Frequency alpha;
    double x;  // phase on T
    int N;     // box radius

    int dimension() const { return w.dimension(); }

    void validate() const {
        if (w.dimension() != alpha.dimension())
            throw std::invalid_argument("LongRangeSpec: w and alpha dimensions differ");
        if (N < w.radius())
            throw std::invalid_argument("LongRangeSpec: box radius below hopping range");
    }
};

struct DualSpec {
    TrigPoly v;
    DecayingSymbol w;
    double epsilon;
    Frequency alpha;
    TorusPoint theta;  // phase on T^d
    int M;             // interval radius

    void validate() const {
        if (w.dimension() != alpha.dimension())
            throw std::invalid_argument("DualSpec: w and alpha dimensions differ");
        if ((int)theta.size() != alpha.dimension())
            throw std::invalid_argument("DualSpec: theta of wrong dimension");
        if (M < v.degree())
            throw std::invalid_argument("DualSpec: interval radius below band width");
    }
};

struct AssembledOperator {
    Eigen::MatrixXcd H;
    Box box;
    int margin;  // interior boundary-layer width for residuals
};

inline double hermiticity_defect(const Eigen::MatrixXcd& H) {
    return (H - H.adjoint()).cwiseAbs().maxCoeff();
}

inline AssembledOperator assemble_long_range(const LongRangeSpec& spec) {
    spec.validate();
    const Box box{spec.dimension(), spec.N};
    const long n = box.cardinality();
    if (n > kMaxDenseCardinality)
        throw std::invalid_argument("assemble_long_range: box cardinality beyond desk scale");

    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(n, n);
    for (long i = 0; i < n; ++i) {
        MultiIndex ni = box.site(i);
        H((Eigen::Index)i, (Eigen::Index)i) += spec.v.evaluate(spec.x + spec.alpha.pairing(ni));
        for (const auto& [k, wk] : spec.w.coeffs()) {
            MultiIndex nj = ni;
            for (int a = 0; a < box.d; ++a) nj[a] += k[a];
            long j = box.index(nj);
            if (j >= 0) H((Eigen::Index)i, (Eigen::Index)j) += spec.epsilon * wk;
        }
    }
    double defect = hermiticity_defect(H);
    if (defect > 1e-12 * std::max(1.0, H.cwiseAbs().maxCoeff()))
        throw std::logic_error("assemble_long_range: assembled matrix is not Hermitian");
    return {std::move(H), box, std::max(spec.v.degree(), spec.w.radius())};
}

inline AssembledOperator assemble_dual(const DualSpec& spec) {
    spec.validate();
    const Box box{1, spec.M};
    const long n = box.cardinality();
    if (n > kMaxDenseCardinality)
        throw std::invalid_argument("assemble_dual: interval beyond desk scale");

    const int l = spec.v.degree();
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(n, n);
    for (long i = 0; i < n; ++i) {
        int ni = (int)i - spec.M;
        H((Eigen::Index)i, (Eigen::Index)i) +=
            spec.epsilon * spec.w.evaluate(spec.alpha.advance(spec.theta, ni));
        for (int k = -l; k <= l; ++k) {
            long j = i + k;
            if (j >= 0 && j < n) H((Eigen::Index)i, (Eigen::Index)j) += spec.v.coeff(k);
        }
    }
    double defect = hermiticity_defect(H);
    if (defect > 1e-12 * std::max(1.0, H.cwiseAbs().maxCoeff()))
        throw std::logic_error("assemble_dual: assembled matrix is not Hermitian");
    return {std::move(H), box, l};
}

struct EigenPair {
    double E;
    Eigen::VectorXcd u;  // unit l^2 norm
    double residual;     // ||H u - E u||_2 over interior sites
};

namespace detail {

inline bool matrix_is_real(const Eigen::MatrixXcd& H) {
    return H.imag().cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, H.cwiseAbs().maxCoeff());
}

inline std::vector<long> interior_indices(const Box& box, int margin) {
    std::vector<long> idx;
    for (long i = 0; i < box.cardinality(); ++i)
        if (box.is_interior(box.site(i), margin)) idx.push_back(i);
    return idx;
}

}  // namespace detail

inline void require_hermitian(const Eigen::MatrixXcd& H) {
    if (hermiticity_defect(H) > 1e-10 * std::max(1.0, H.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("diagonalize: matrix is not Hermitian");
}

namespace detail {

inline std::vector<EigenPair> diagonalize_impl(const Eigen::MatrixXcd& H,
                                               const std::vector<long>& residual_sites) {
    require_hermitian(H);
    const Eigen::Index n = H.rows();
    Eigen::VectorXd evals;
    Eigen::MatrixXcd evecs;
    if (matrix_is_real(H)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.real());
        if (es.info() != Eigen::Success) throw std::runtime_error("diagonalize: solver failed");
        evals = es.eigenvalues();
        evecs = es.eigenvectors().cast<Complex>();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
        if (es.info() != Eigen::Success) throw std::runtime_error("diagonalize: solver failed");
        evals = es.eigenvalues();
        evecs = es.eigenvectors();
    }
    std::vector<EigenPair> out((std::size_t)n);
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::VectorXcd u = evecs.col(j);
        Eigen::VectorXcd r = H * u - evals(j) * u;
        double rnorm = 0;
        for (long i : residual_sites) rnorm += std::norm(r((Eigen::Index)i));
        out[(std::size_t)j] = {evals(j), std::move(u), std::sqrt(rnorm)};
    }
    return out;  // SelfAdjointEigenSolver returns ascending eigenvalues
}

}  // namespace detail

// Full spectrum with orthonormal eigenvectors, sorted by E; residual over
// every site.
inline std::vector<EigenPair> diagonalize(const Eigen::MatrixXcd& H) {
    std::vector<long> all((std::size_t)H.rows());
    for (long i = 0; i < (long)all.size(); ++i) all[(std::size_t)i] = i;
    return detail::diagonalize_impl(H, all);
}

// Residuals restricted to sites farther than `margin` from the box boundary,
// where the truncated action agrees with the untruncated operator.
inline std::vector<EigenPair> diagonalize(const AssembledOperator& op) {
    return detail::diagonalize_impl(op.H, detail::interior_indices(op.box, op.margin));
}

// Eigenvalues only (ascending). Diagonal matrices short-circuit, which keeps
// eps = 0 phase sweeps cheap.
inline Eigen::VectorXd eigenvalues_of(const AssembledOperator& op) {
    require_hermitian(op.H);
    const Eigen::Index n = op.H.rows();
    double offdiag = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j) offdiag = std::max(offdiag, std::abs(op.H(i, j)));
    if (offdiag == 0.0) {
        Eigen::VectorXd ev = op.H.diagonal().real();
        std::sort(ev.data(), ev.data() + n);
        return ev;
    }
    if (detail::matrix_is_real(op.H)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.H.real(), Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(op.H, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

// Spectral weights |u_E(p)|^2 of the delta mass at site p; they sum to 1.
inline std::vector<std::pair<double, double>> spectral_weights(const std::vector<EigenPair>& pairs,
                                                               const Box& box,
                                                               const MultiIndex& p) {
    long ip = box.index(p);
    if (ip < 0) throw std::invalid_argument("spectral_weights: site outside box");
    std::vector<std::pair<double, double>> out;
    out.reserve(pairs.size());
    for (const auto& ep : pairs) out.push_back({ep.E, std::norm(ep.u((Eigen::Index)ip))});
    return out;
}

inline MultiIndex localization_center(const Eigen::VectorXcd& u, const Box& box) {
    Eigen::Index best = 0;
    double bm = -1;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        double a = std::abs(u(i));
        if (a > bm) { bm = a; best = i; }
    }
    return box.site(best);
}

struct EmpiricalIDS {
    std::vector<double> energies;  // sorted grid
    std::vector<double> values;    // in [0,1], nondecreasing
    int N;
    int phase_count;
};

// value(E) = average over phases of #(eigenvalues <= E) / box cardinality.
// The phase list replaces x (long-range family).
inline EmpiricalIDS empirical_ids(const LongRangeSpec& base, std::vector<double> energy_grid,
                                  const std::vector<double>& phases) {
    if (phases.empty()) throw std::invalid_argument("empirical_ids: need at least one phase");
    std::sort(energy_grid.begin(), energy_grid.end());
    std::vector<double> acc(energy_grid.size(), 0.0);
    long card = 0;
    for (double x : phases) {
        LongRangeSpec spec = base;
        spec.x = wrap_unit(x);
        auto op = assemble_long_range(spec);
        card = op.box.cardinality();
        Eigen::VectorXd ev = eigenvalues_of(op);
        for (std::size_t g = 0; g < energy_grid.size(); ++g) {
            auto cnt = std::upper_bound(ev.data(), ev.data() + ev.size(), energy_grid[g]) -
                       ev.data();
            acc[g] += (double)cnt / (double)card;
        }
    }
    EmpiricalIDS ids;
    ids.energies = std::move(energy_grid);
    ids.values.resize(acc.size());
    for (std::size_t g = 0; g < acc.size(); ++g) ids.values[g] = acc[g] / (double)phases.size();
    ids.N = base.N;
    ids.phase_count = (int)phases.size();
    return ids;
}

// Same phase average for the dual family (theta samples).
inline EmpiricalIDS empirical_ids_dual(const DualSpec& base, std::vector<double> energy_grid,
                                       const std::vector<TorusPoint>& thetas) {
    if (thetas.empty()) throw std::invalid_argument("empirical_ids_dual: need at least one phase");
    std::sort(energy_grid.begin(), energy_grid.end());
    std::vector<double> acc(energy_grid.size(), 0.0);
    long card = 0;
    for (const auto& th : thetas) {
        DualSpec spec = base;
        spec.theta = wrap_point(th);
        auto op = assemble_dual(spec);
        card = op.box.cardinality();
        Eigen::VectorXd ev = eigenvalues_of(op);
        for (std::size_t g = 0; g < energy_grid.size(); ++g) {
            auto cnt = std::upper_bound(ev.data(), ev.data() + ev.size(), energy_grid[g]) -
                       ev.data();
            acc[g] += (double)cnt / (double)card;
        }
    }
    EmpiricalIDS ids;
    ids.energies = std::move(energy_grid);
    ids.values.resize(acc.size());
    for (std::size_t g = 0; g < acc.size(); ++g) ids.values[g] = acc[g] / (double)thetas.size();
    ids.N = base.M;
    ids.phase_count = (int)thetas.size();
    return ids;
}

}  // namespace qplab
