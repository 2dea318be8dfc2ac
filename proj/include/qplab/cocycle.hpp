#pragma once

// The 2l x 2l companion cocycle of the dual eigen-equation
//     sum_{|k|<=l} v_k u_{n+k} + eps w(theta + n alpha) u_n = E u_n.
// With the window state X_n = (u_{n+l-1}, ..., u_{n-l})^T the equation at
// site n reads X_{n+1} = A_E(theta + n alpha) X_n, where A_E(theta) has
// first row (-v_{l-1}/v_l, ..., -v_1/v_l, (E - v_0 - eps w(theta))/v_l,
// -v_{-1}/v_l, ..., -v_{-l}/v_l), a subdiagonal identity, and a zero last
// column below the first row. |det A_E| = |v_{-l}/v_l| = 1 for real v.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "qplab/decaying_symbol.hpp"
#include "qplab/frequency.hpp"
#include "qplab/trig_poly.hpp"

namespace qplab {

class CocycleSampler {
  public:
    CocycleSampler(TrigPoly v, DecayingSymbol w, double epsilon, Complex E, Frequency alpha)
        : v_(std::move(v)), w_(std::move(w)), eps_(epsilon), E_(E), alpha_(std::move(alpha)) {
        if (w_.dimension() != alpha_.dimension())
            throw std::invalid_argument("CocycleSampler: w and alpha dimensions differ");
        const int l = v_.degree();
        base_ = Eigen::MatrixXcd::Zero(2 * l, 2 * l);
        const Complex vl = v_.coeff(l);
        for (int j = 1; j <= l - 1; ++j) base_(0, l - 1 - j) = -v_.coeff(j) / vl;
        base_(0, l - 1) = (E_ - v_.coeff(0)) / vl;
        for (int j = 1; j <= l; ++j) base_(0, l - 1 + j) = -v_.coeff(-j) / vl;
        for (int i = 1; i < 2 * l; ++i) base_(i, i - 1) = Complex(1);
        wslot_ = -eps_ / vl;
    }

    int size() const { return (int)base_.rows(); }
    int block_degree() const { return size() / 2; }
    int dimension() const { return alpha_.dimension(); }
    const TrigPoly& v() const { return v_; }
    const DecayingSymbol& w() const { return w_; }
    double epsilon() const { return eps_; }
    Complex energy() const { return E_; }
    const Frequency& alpha() const { return alpha_; }

    CocycleSampler with_energy(Complex E) const { return {v_, w_, eps_, E, alpha_}; }
    CocycleSampler with_epsilon(double eps) const { return {v_, w_, eps, E_, alpha_}; }

    Eigen::MatrixXcd operator()(const TorusPoint& theta) const {
        Eigen::MatrixXcd A = base_;
        A(0, block_degree() - 1) += wslot_ * w_.evaluate_complex(theta);
        return A;
    }

  private:
    TrigPoly v_;
    DecayingSymbol w_;
    double eps_;
    Complex E_;
    Frequency alpha_;
    Eigen::MatrixXcd base_;
    Complex wslot_;
};

// A sampled matrix-valued function on T^d; cocycles, manufactured
// conjugations, and test fields all travel through this one shape.
struct MatrixField {
    int d;     // torus dimension
    int size;  // matrix size
    std::function<Eigen::MatrixXcd(const TorusPoint&)> sample;
};

inline MatrixField matrix_field(const CocycleSampler& c) {
    return {c.dimension(), c.size(), [c](const TorusPoint& th) { return c(th); }};
}

// Matrix product with the magnitude factored out: value = m * e^{log_scale}.
// log_abs_det is accumulated per factor; reading it off the final matrix
// would cancel catastrophically once the product condition passes 1/eps.
struct ScaledMatrix {
    Eigen::MatrixXcd m;
    double log_scale = 0.0;
    double log_abs_det = 0.0;

    void renormalize() {
        double nrm = m.norm();
        if (nrm > 0 && std::isfinite(nrm)) {
            m /= nrm;
            log_scale += std::log(nrm);
        }
    }
    Eigen::MatrixXcd value() const { return m * std::exp(log_scale); }
    double log_norm() const { return log_scale + std::log(m.norm()); }
};

// Product A(theta0 + (n-1) alpha) ... A(theta0), renormalized every few
// steps so exponents up to ~log 5 survive n = 1e5 without overflow.
inline ScaledMatrix iterate(const CocycleSampler& c, const TorusPoint& theta0, long n,
                            int renorm_every = 10) {
    if (n < 1) throw std::invalid_argument("iterate: need n >= 1");
    ScaledMatrix P{Eigen::MatrixXcd::Identity(c.size(), c.size()), 0.0, 0.0};
    TorusPoint th = wrap_point(theta0);
    for (long j = 0; j < n; ++j) {
        Eigen::MatrixXcd A = c(th);
        P.m = A * P.m;
        P.log_abs_det += std::log(std::abs(A.determinant()));
        if ((j + 1) % renorm_every == 0) P.renormalize();
        th = c.alpha().advance(th);
    }
    P.renormalize();
    return P;
}

struct LyapunovReport {
    std::vector<double> exponents;  // descending, one per cocycle dimension
    std::vector<double> stderrs;    // standard error over phase samples
    long iterations = 0;
    int phase_count = 0;

    double sum() const {
        double s = 0;
        for (double e : exponents) s += e;
        return s;
    }
};

namespace detail {

// One Benettin run: QR re-orthonormalization every `cadence` steps,
// skipping the first `burn` steps from the accumulation. Returns the 2l
// per-run exponents, descending.
inline std::vector<double> lyapunov_single(const CocycleSampler& c, const TorusPoint& theta0,
                                           long n, long burn, int cadence) {
    const int m = c.size();
    Eigen::MatrixXcd Q = Eigen::MatrixXcd::Identity(m, m);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(m);
    TorusPoint th = wrap_point(theta0);
    long counted = 0;
    for (long j = 0; j < n; j += cadence) {
        long steps = std::min<long>(cadence, n - j);
        for (long s = 0; s < steps; ++s) {
            Q = c(th) * Q;
            th = c.alpha().advance(th);
        }
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(Q);
        Eigen::MatrixXcd R = qr.matrixQR().triangularView<Eigen::Upper>();
        Q = qr.householderQ() * Eigen::MatrixXcd::Identity(m, m);
        for (int i = 0; i < m; ++i) {
            double a = std::abs(R(i, i));
            if (j + steps > burn && a > 0) acc(i) += std::log(a);
        }
        if (j + steps > burn) counted += steps;
    }
    std::vector<double> out(m);
    for (int i = 0; i < m; ++i) out[i] = acc(i) / (double)std::max<long>(1, counted);
    std::sort(out.begin(), out.end(), std::greater<double>());
    return out;
}

}  // namespace detail

// Full Lyapunov spectrum averaged over phase samples. Standard errors come
// from the per-phase spread. A burn-in prefix is excluded so constant
// hyperbolic cocycles converge to machine accuracy.
inline LyapunovReport lyapunov_spectrum(const CocycleSampler& c, long n,
                                        const std::vector<TorusPoint>& phases,
                                        int cadence = 10) {
    if (n < 1000) throw std::invalid_argument("lyapunov_spectrum: need n >= 1e3");
    if (phases.empty()) throw std::invalid_argument("lyapunov_spectrum: need phase samples");
    const int m = c.size();
    const long burn = std::max<long>(100, n / 100);
    std::vector<std::vector<double>> runs;
    runs.reserve(phases.size());
    for (const auto& th : phases) runs.push_back(detail::lyapunov_single(c, th, n, burn, cadence));

    LyapunovReport rep;
    rep.iterations = n;
    rep.phase_count = (int)phases.size();
    rep.exponents.assign(m, 0.0);
    rep.stderrs.assign(m, 0.0);
    for (const auto& r : runs)
        for (int i = 0; i < m; ++i) rep.exponents[i] += r[i];
    for (int i = 0; i < m; ++i) rep.exponents[i] /= (double)runs.size();
    if (runs.size() > 1) {
        for (const auto& r : runs)
            for (int i = 0; i < m; ++i) {
                double d = r[i] - rep.exponents[i];
                rep.stderrs[i] += d * d;
            }
        for (int i = 0; i < m; ++i)
            rep.stderrs[i] = std::sqrt(rep.stderrs[i] / ((double)runs.size() - 1) /
                                       (double)runs.size());
    }
    return rep;
}

inline std::vector<TorusPoint> equidistributed_phases(int d, int count) {
    std::vector<TorusPoint> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        TorusPoint p(d);
        for (int a = 0; a < d; ++a)
            p[a] = wrap_unit((i + 0.5) / count + 0.382 * a);  // staggered per axis
        out.push_back(p);
    }
    return out;
}

// Fibred rotation number of the 2x2 real cocycle: mean angular increment of
// the projective action, folded to [0, 1/2]. Only defined for l = 1 with
// real v and real E.
inline double rotation_number(const CocycleSampler& c, long n,
                              const std::vector<TorusPoint>& phases) {
    if (c.size() != 2)
        throw std::invalid_argument(
            "rotation_number: only defined for the 2x2 real case (single-humped projective "
            "circle); higher block degrees have no single winding number");
    if (std::abs(c.energy().imag()) > 0)
        throw std::invalid_argument("rotation_number: energy must be real");
    if (std::abs(c.v().coeff(1).imag()) > 1e-14)
        throw std::invalid_argument("rotation_number: top coefficient must be real");
    if (n < 1) throw std::invalid_argument("rotation_number: need n >= 1");
    if (phases.empty()) throw std::invalid_argument("rotation_number: need phase samples");

    double mean = 0;
    for (const auto& th0 : phases) {
        TorusPoint th = wrap_point(th0);
        Eigen::Vector2d y(1.0, 0.5);
        y.normalize();
        double total = 0;
        for (long j = 0; j < n; ++j) {
            Eigen::MatrixXcd Ac = c(th);
            Eigen::Matrix2d A;
            A << Ac(0, 0).real(), Ac(0, 1).real(), Ac(1, 0).real(), Ac(1, 1).real();
            Eigen::Vector2d z = A * y;
            total += std::atan2(y(0) * z(1) - y(1) * z(0), y(0) * z(0) + y(1) * z(1));
            y = z.normalized();
            th = c.alpha().advance(th);
        }
        double rho = wrap_unit(total / (kTwoPi * (double)n));
        if (rho > 0.5) rho = 1.0 - rho;
        mean += rho;
    }
    return mean / (double)phases.size();
}

}  // namespace qplab
