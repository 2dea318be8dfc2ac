#pragma once

// The duality transform between the long-range operator and its banded
// dual. An eigenvector u of H with eigenvalue E and phase x is turned into
// the family
//     u~_theta(n) = u^(theta + n alpha) e^{2 pi i n x},
//     u^(theta)   = sum_n u_n e^{2 pi i <n, theta>},
// which solves the banded dual equation with the *reflected* symbol
// w(-theta): with the e^{+2 pi i} transform the hopping sum picks up a
// reflection. For even w (every cosine model) the reflected symbol is w
// itself. The 2l-window of u~ is transported by the companion cocycle of
// the reflected symbol:
//     A(theta) W(theta) = e^{2 pi i x} W(theta + alpha),
//     W(theta) = (u~_theta(l-1), ..., u~_theta(-l))^T   (window anchor -l).
// Other window anchors a satisfy the same relation with A sampled at
// theta + (a + l) alpha.

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <vector>

#include "qplab/cocycle.hpp"
#include "qplab/fourier.hpp"
#include "qplab/lattice.hpp"

namespace qplab {

// Eigenvector data as a sequence on a Z^d box.
struct LatticeVector {
    Box box;
    Eigen::VectorXcd values;

    Complex transform_at(const TorusPoint& theta) const {
        Complex s(0);
        for (long i = 0; i < box.cardinality(); ++i) {
            MultiIndex n = box.site(i);
            s += values((Eigen::Index)i) * std::polar(1.0, kTwoPi * dot(n, theta));
        }
        return s;
    }
};

struct DualSolution {
    TorusPoint theta;
    double x;
    int window;                    // values cover |n| <= window
    std::vector<Complex> values;   // values[n + window] = u~_theta(n)
    double residual;               // dual eigen-equation defect on |n| <= window - l
    double window_norm;            // l2 norm of the stored window
    bool flagged;                  // window norm below visibility threshold

    Complex value(int n) const { return values[(std::size_t)(n + window)]; }
};

// Build u~_theta on |n| <= M and measure the dual eigen-equation residual
// (reflected symbol) on the interior |n| <= M - l.
inline DualSolution dual_solution(const LatticeVector& u, Complex E, double x,
                                  const Frequency& alpha, const TrigPoly& v,
                                  const DecayingSymbol& w, double epsilon,
                                  const TorusPoint& theta, int M) {
    DualSolution out;
    out.theta = wrap_point(theta);
    out.x = wrap_unit(x);
    out.window = M;
    out.values.resize((std::size_t)(2 * M + 1));
    for (int n = -M; n <= M; ++n) {
        TorusPoint th = alpha.advance(out.theta, n);
        out.values[(std::size_t)(n + M)] =
            u.transform_at(th) * std::polar(1.0, kTwoPi * n * out.x);
    }
    const int l = v.degree();
    const DecayingSymbol wr = w.reflected();
    double rnorm = 0, unorm = 0;
    for (int n = -(M - l); n <= M - l; ++n) {
        Complex r = (epsilon * wr.evaluate_complex(alpha.advance(out.theta, n)) - E) *
                    out.value(n);
        for (int j = -l; j <= l; ++j) r += v.coeff(j) * out.value(n + j);
        rnorm += std::norm(r);
        unorm += std::norm(out.value(n));
    }
    out.window_norm = std::sqrt(unorm);
    out.flagged = out.window_norm < 1e-8;
    out.residual = out.flagged ? std::sqrt(rnorm) : std::sqrt(rnorm) / out.window_norm;
    return out;
}

struct DualStateVector {
    FourierSeries<Eigen::VectorXcd> series;  // 2l components, modes of u
    int anchor;                              // components (u~(a+2l-1), ..., u~(a))
    double x;
    double transport_defect;  // sup over the grid of ||A W - e^{2 pi i x} W(.+alpha)||
};

// The 2l-window of u~ as a vector-valued Fourier series in theta.
// anchor = -l gives the window transported by A at theta itself; other
// anchors a are transported by A sampled at theta + (a + l) alpha.
inline FourierSeries<Eigen::VectorXcd> state_vector_series(const LatticeVector& u, double x,
                                                           const Frequency& alpha, int l,
                                                           int anchor) {
    const int d = alpha.dimension();
    FourierSeries<Eigen::VectorXcd> series(d, u.box.radius);
    for (long i = 0; i < u.box.cardinality(); ++i) {
        MultiIndex n = u.box.site(i);
        Eigen::VectorXcd comp(2 * l);
        double base = alpha.pairing(n) + x;
        for (int p = 0; p < 2 * l; ++p) {
            int site = anchor + 2 * l - 1 - p;
            comp(p) = u.values((Eigen::Index)i) * std::polar(1.0, kTwoPi * site * base);
        }
        series.set(n, std::move(comp));
    }
    return series;
}

inline double transport_defect(const FourierSeries<Eigen::VectorXcd>& series, int anchor,
                               double x, const Frequency& alpha, const MatrixField& A,
                               int grid_points = 256) {
    const int d = alpha.dimension();
    const int l = A.size / 2;
    const Complex phase = std::polar(1.0, kTwoPi * x);
    TorusPoint shift(d, 0.0);
    for (int i = 0; i < d; ++i) shift[i] = wrap_unit((anchor + l) * alpha[i]);
    double defect = 0;
    TorusGrid grid(d, d == 1 ? std::max(2, grid_points) : 16);
    for (long g = 0; g < grid.total(); ++g) {
        TorusPoint th = grid.point(g);
        TorusPoint th_s(d);
        for (int i = 0; i < d; ++i) th_s[i] = wrap_unit(th[i] + shift[i]);
        Eigen::VectorXcd W = series.evaluate(th);
        Eigen::VectorXcd Wn = series.evaluate(alpha.advance(th, 1));
        defect = std::max(defect, (A.sample(th_s) * W - phase * Wn).norm());
    }
    return defect;
}

inline DualStateVector dual_state_vector(const LatticeVector& u, Complex E, double x,
                                         const Frequency& alpha, const TrigPoly& v,
                                         const DecayingSymbol& w, double epsilon,
                                         int anchor_offset = 0, int grid_points = 256) {
    const int l = v.degree();
    const int a = -l + anchor_offset;
    DualStateVector out{state_vector_series(u, wrap_unit(x), alpha, l, a), a, wrap_unit(x), 0.0};
    CocycleSampler A(v, w.reflected(), epsilon, E, alpha);
    out.transport_defect =
        transport_defect(out.series, a, out.x, alpha, matrix_field(A), grid_points);
    return out;
}

// The transfer cocycle of the long-range difference equation itself,
// defined when w has finite range in one dimension: dividing the
// eigen-equation by eps swaps the roles of the two functions, giving the
// banded equation with hopping w, potential v/eps, and energy E/eps. Its
// top Lyapunov exponent governs the decay rate of localized eigenvectors.
inline CocycleSampler transfer_cocycle(const LongRangeSpec& spec, double E) {
    if (spec.dimension() != 1)
        throw std::invalid_argument("transfer_cocycle: needs a one-dimensional lattice");
    if (spec.epsilon == 0.0)
        throw std::invalid_argument("transfer_cocycle: hopping vanishes at eps = 0");
    int range = 0;
    for (const auto& [k, wk] : spec.w.coeffs())
        if (std::abs(wk) > 0) range = std::max(range, std::abs(k[0]));
    if (range == 0) throw std::invalid_argument("transfer_cocycle: w has no hopping term");
    std::vector<Complex> hop((std::size_t)(2 * range + 1), Complex(0));
    for (const auto& [k, wk] : spec.w.coeffs()) hop[(std::size_t)(k[0] + range)] = wk;
    TrigPoly hopping(range, std::move(hop));
    DecayingSymbol::CoeffMap pot;
    for (int k = -spec.v.degree(); k <= spec.v.degree(); ++k)
        pot[MultiIndex{k}] = spec.v.coeff(k);
    DecayingSymbol potential(1, spec.v.degree(), std::move(pot));
    return {hopping, potential, 1.0 / spec.epsilon, Complex(E / spec.epsilon), spec.alpha};
}

// ---- spectra comparison ------------------------------------------------

struct LongRangeFamily {
    LongRangeSpec base;
    std::vector<double> phases;
    double scale = 1.0;
};

struct DualFamily {
    DualSpec base;
    std::vector<TorusPoint> phases;
    double scale = 1.0;
};

inline std::vector<double> collect_spectrum(const LongRangeFamily& fam) {
    std::vector<double> out;
    for (double x : fam.phases) {
        LongRangeSpec spec = fam.base;
        spec.x = wrap_unit(x);
        Eigen::VectorXd ev = eigenvalues_of(assemble_long_range(spec));
        for (Eigen::Index i = 0; i < ev.size(); ++i) out.push_back(fam.scale * ev(i));
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<double> collect_spectrum(const DualFamily& fam) {
    std::vector<double> out;
    for (const auto& th : fam.phases) {
        DualSpec spec = fam.base;
        spec.theta = wrap_point(th);
        Eigen::VectorXd ev = eigenvalues_of(assemble_dual(spec));
        for (Eigen::Index i = 0; i < ev.size(); ++i) out.push_back(fam.scale * ev(i));
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct BulkFilter {
    bool enabled = true;
    double delta = 0.01;     // neighborhood radius
    int min_neighbors = 20;  // corroborating points required within delta
};

// Drop isolated points of a sorted union. Dirichlet truncations place a few
// boundary-localized eigenvalues inside spectral gaps; they move with the
// phase while bulk eigenvalues pile up densely, so a neighbor count over the
// phase union separates the two.
inline std::vector<double> bulk_filtered(const std::vector<double>& sorted_union,
                                         const BulkFilter& f) {
    if (!f.enabled) return sorted_union;
    std::vector<double> out;
    out.reserve(sorted_union.size());
    for (std::size_t i = 0; i < sorted_union.size(); ++i) {
        auto lo = std::lower_bound(sorted_union.begin(), sorted_union.end(),
                                   sorted_union[i] - f.delta);
        auto hi = std::upper_bound(sorted_union.begin(), sorted_union.end(),
                                   sorted_union[i] + f.delta);
        if ((int)(hi - lo) - 1 >= f.min_neighbors) out.push_back(sorted_union[i]);
    }
    return out;
}

inline double hausdorff_distance(const std::vector<double>& A, const std::vector<double>& B) {
    if (A.empty() || B.empty())
        throw std::invalid_argument("hausdorff_distance: empty spectrum");
    auto one_sided = [](const std::vector<double>& P, const std::vector<double>& Q) {
        double h = 0;
        for (double p : P) {
            auto it = std::lower_bound(Q.begin(), Q.end(), p);
            double d = 1e300;
            if (it != Q.end()) d = std::min(d, *it - p);
            if (it != Q.begin()) d = std::min(d, p - *(it - 1));
            h = std::max(h, d);
        }
        return h;
    };
    return std::max(one_sided(A, B), one_sided(B, A));
}

struct SpectraComparison {
    double hausdorff;
    std::vector<double> side_a;  // filtered, sorted
    std::vector<double> side_b;
};

template <class FamilyA, class FamilyB>
SpectraComparison spectra_compare(const FamilyA& a, const FamilyB& b,
                                  const BulkFilter& filter = {}) {
    SpectraComparison out;
    out.side_a = bulk_filtered(collect_spectrum(a), filter);
    out.side_b = bulk_filtered(collect_spectrum(b), filter);
    out.hausdorff = hausdorff_distance(out.side_a, out.side_b);
    return out;
}

}  // namespace qplab
