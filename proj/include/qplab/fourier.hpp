#pragma once

// Fourier-series containers and torus grids.
//
// FourierSeries<Coeff> holds finitely many modes k in Z^d, |k|_inf <= K,
// with scalar or matrix coefficients, under the convention
//     f(theta) = sum_k coeff_k e^{2 pi i <k, theta>}.
// TorusGrid is the uniform tensor grid theta_j = j/G used for pointwise
// work; grid values and coefficients convert through a radix-2 FFT along
// each axis (grid sizes are powers of two).

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

#include "qplab/torus.hpp"
#include "qplab/trig_poly.hpp"

namespace qplab {

namespace detail {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place radix-2 FFT, kernel e^{-2 pi i jm/n} (forward), e^{+...} (inverse).
// No normalization.
inline void fft_pow2(Complex* a, int n, int stride, bool inverse) {
    if (n == 1) return;
    // bit reversal
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i * stride], a[j * stride]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        double ang = kTwoPi / len * (inverse ? 1.0 : -1.0);
        Complex wl = std::polar(1.0, ang);
        for (int i = 0; i < n; i += len) {
            Complex w(1);
            for (int j = 0; j < len / 2; ++j) {
                Complex u = a[(i + j) * stride];
                Complex v = a[(i + j + len / 2) * stride] * w;
                a[(i + j) * stride] = u + v;
                a[(i + j + len / 2) * stride] = u - v;
                w *= wl;
            }
        }
    }
}

}  // namespace detail

// Uniform tensor grid on T^d with G points per axis, flattened row-major.
struct TorusGrid {
    int d;
    int size;  // per axis, power of two

    TorusGrid(int d_, int size_) : d(d_), size(size_) {
        if (d < 1) throw std::invalid_argument("TorusGrid: dimension must be positive");
        if (!detail::is_pow2(size)) throw std::invalid_argument("TorusGrid: size must be a power of two");
    }

    long total() const {
        long t = 1;
        for (int i = 0; i < d; ++i) t *= size;
        return t;
    }

    TorusPoint point(long flat) const {
        TorusPoint p(d);
        for (int axis = d - 1; axis >= 0; --axis) {
            p[axis] = (double)(flat % size) / size;
            flat /= size;
        }
        return p;
    }

    // flat index of mode k (components folded mod size)
    long fold(const MultiIndex& k) const {
        long flat = 0;
        for (int axis = 0; axis < d; ++axis) {
            int r = k[axis] % size;
            if (r < 0) r += size;
            flat = flat * size + r;
        }
        return flat;
    }

    // FFT along every axis of a flattened array, in place.
    void transform(std::vector<Complex>& values, bool inverse) const {
        if ((long)values.size() != total()) throw std::invalid_argument("TorusGrid: bad buffer size");
        long block = total();
        for (int axis = 0; axis < d; ++axis) {
            block /= size;  // stride of this axis
            long nlines = total() / size;
            for (long line = 0; line < nlines; ++line) {
                // decompose line index into (outer, inner) around this axis
                long inner = line % block;
                long outer = line / block;
                long base = outer * block * size + inner;
                detail::fft_pow2(values.data() + base, size, (int)block, inverse);
            }
        }
    }
};

template <class Coeff>
struct CoeffOps;  // zero(), sqnorm()

template <>
struct CoeffOps<Complex> {
    static Complex zero(const Complex&) { return Complex(0); }
    static double sqnorm(const Complex& c) { return std::norm(c); }
};

template <>
struct CoeffOps<Eigen::MatrixXcd> {
    static Eigen::MatrixXcd zero(const Eigen::MatrixXcd& like) {
        return Eigen::MatrixXcd::Zero(like.rows(), like.cols());
    }
    static double sqnorm(const Eigen::MatrixXcd& c) { return c.squaredNorm(); }
};

template <>
struct CoeffOps<Eigen::VectorXcd> {
    static Eigen::VectorXcd zero(const Eigen::VectorXcd& like) {
        return Eigen::VectorXcd::Zero(like.size());
    }
    static double sqnorm(const Eigen::VectorXcd& c) { return c.squaredNorm(); }
};

template <class Coeff>
class FourierSeries {
  public:
    using CoeffMap = std::map<MultiIndex, Coeff>;

    FourierSeries() : d_(1), K_(0) {}
    FourierSeries(int dimension, int truncation) : d_(dimension), K_(truncation) {
        if (d_ < 1) throw std::invalid_argument("FourierSeries: dimension must be positive");
        if (K_ < 0) throw std::invalid_argument("FourierSeries: negative truncation");
    }

    int dimension() const { return d_; }
    int truncation() const { return K_; }
    const CoeffMap& coeffs() const { return coeffs_; }
    bool empty() const { return coeffs_.empty(); }

    void set(const MultiIndex& k, Coeff c) {
        if ((int)k.size() != d_) throw std::invalid_argument("FourierSeries: mode of wrong dimension");
        if (norm_inf(k) > K_) throw std::invalid_argument("FourierSeries: mode outside truncation");
        coeffs_[k] = std::move(c);
    }

    Coeff coeff(const MultiIndex& k) const {
        auto it = coeffs_.find(k);
        if (it != coeffs_.end()) return it->second;
        if (coeffs_.empty()) throw std::logic_error("FourierSeries: empty series has no shape");
        return CoeffOps<Coeff>::zero(coeffs_.begin()->second);
    }

    Coeff evaluate(const TorusPoint& theta) const {
        if ((int)theta.size() != d_)
            throw std::invalid_argument("FourierSeries: point of wrong dimension");
        if (coeffs_.empty()) throw std::logic_error("FourierSeries: empty series");
        Coeff s = CoeffOps<Coeff>::zero(coeffs_.begin()->second);
        for (const auto& [k, c] : coeffs_) s += c * std::polar(1.0, kTwoPi * dot(k, theta));
        return s;
    }

    double sqnorm() const {  // L^2 norm squared = sum of |coeff|^2 (Parseval)
        double s = 0;
        for (const auto& [k, c] : coeffs_) s += CoeffOps<Coeff>::sqnorm(c);
        return s;
    }

    // l^2 mass per shell |k|_inf = s, s = 0..K.
    std::vector<double> shell_mass() const {
        std::vector<double> m(K_ + 1, 0.0);
        for (const auto& [k, c] : coeffs_) m[norm_inf(k)] += CoeffOps<Coeff>::sqnorm(c);
        return m;
    }

  private:
    int d_, K_;
    CoeffMap coeffs_;
};

// The Fourier transform of a finitely supported sequence u on Z^d:
// u_hat(theta) = sum_n u_n e^{2 pi i <n,theta>}, i.e. coeff_n = u_n.
inline FourierSeries<Complex> fourier_transform_sequence(
    const std::map<MultiIndex, Complex>& u, int dimension) {
    int K = 0;
    for (const auto& [n, c] : u) {
        if ((int)n.size() != dimension)
            throw std::invalid_argument("fourier_transform_sequence: mixed dimensions");
        K = std::max(K, norm_inf(n));
    }
    FourierSeries<Complex> s(dimension, K);
    for (const auto& [n, c] : u) s.set(n, c);
    return s;
}

// Scalar series from grid samples: exact for band limits K < size/2.
inline FourierSeries<Complex> series_from_grid(const TorusGrid& grid, std::vector<Complex> values,
                                               int K) {
    if (2 * K + 1 > grid.size)
        throw std::invalid_argument("series_from_grid: truncation exceeds grid resolution");
    grid.transform(values, /*inverse=*/false);
    double scale = 1.0 / (double)grid.total();
    FourierSeries<Complex> s(grid.d, K);
    for_each_in_box(grid.d, K, [&](const MultiIndex& k) {
        Complex c = values[grid.fold(k)] * scale;
        s.set(k, c);
    });
    return s;
}

// Grid samples of a scalar series (zero padding outside the truncation).
inline std::vector<Complex> grid_from_series(const TorusGrid& grid,
                                             const FourierSeries<Complex>& s) {
    if (2 * s.truncation() + 1 > grid.size)
        throw std::invalid_argument("grid_from_series: truncation exceeds grid resolution");
    std::vector<Complex> values(grid.total(), Complex(0));
    for (const auto& [k, c] : s.coeffs()) values[grid.fold(k)] = c;
    grid.transform(values, /*inverse=*/true);
    return values;
}

// Effective analyticity radius from the decay slope of log shell mass:
// if |coeff| ~ e^{-2 pi h |k|} the shell mass decays like e^{-4 pi h s},
// so h_hat = -slope / (4 pi). Fitted over shells [lo, hi]; shells with no
// mass are skipped. Returns 0 when fewer than two usable shells remain.
template <class Coeff>
double effective_decay_radius(const FourierSeries<Coeff>& s, int lo, int hi) {
    auto mass = s.shell_mass();
    lo = std::max(lo, 0);
    hi = std::min<int>(hi, (int)mass.size() - 1);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int sh = lo; sh <= hi; ++sh) {
        if (mass[sh] <= 0.0) continue;
        double x = sh, y = std::log(mass[sh]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++n;
    }
    if (n < 2) return 0.0;
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return std::max(0.0, -slope / (2.0 * kTwoPi));
}

template <class Coeff>
double effective_decay_radius(const FourierSeries<Coeff>& s) {
    return effective_decay_radius(s, s.truncation() / 4, (3 * s.truncation()) / 4);
}

}  // namespace qplab
