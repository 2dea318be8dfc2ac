#pragma once

// Frequency vectors alpha in T^d with an irrationality screen and a
// finite-range Diophantine diagnostic. The screen rejects any component
// with min_{1<=q<=1e6} ||q alpha|| <= 1e-12 (distance to the nearest
// integer); the candidate q are continued-fraction convergent
// denominators, which carry the minimum. The golden mean passes
// (||F_30 alpha|| ~ 5e-7); decimal rationals like 1/2 do not.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qplab/torus.hpp"

namespace qplab {

inline constexpr double kGoldenMean = 0.61803398874989484820;  // (sqrt5 - 1)/2

namespace detail {

// Smallest ||q x|| over 1 <= q <= q_max, scanning convergent denominators.
inline double best_rational_fit(double x, std::int64_t q_max) {
    x = wrap_unit(x);
    double best = torus_dist(x);
    // continued fraction of x; denominators q_{n+1} = a_{n+1} q_n + q_{n-1}
    double frac = x;
    std::int64_t q_prev = 0, q_cur = 1;
    for (int it = 0; it < 64; ++it) {
        if (frac < 1e-18) break;
        double inv = 1.0 / frac;
        double a = std::floor(inv);
        if (a > 4e18) break;
        std::int64_t q_next = (std::int64_t)a * q_cur + q_prev;
        if (q_next > q_max || q_next <= 0) break;
        best = std::min(best, torus_dist(q_next * x));
        q_prev = q_cur;
        q_cur = q_next;
        frac = inv - a;
    }
    return best;
}

}  // namespace detail

class Frequency {
  public:
    explicit Frequency(std::vector<double> alpha) : alpha_(std::move(alpha)) {
        if (alpha_.empty()) throw std::invalid_argument("Frequency: empty vector");
        for (double& a : alpha_) a = wrap_unit(a);
        for (double a : alpha_) {
            if (detail::best_rational_fit(a, 1000000) <= 1e-12)
                throw std::invalid_argument(
                    "Frequency: component is rational to working precision "
                    "(denominator <= 1e6), Diophantine screen rejects it");
        }
    }

    static Frequency golden() { return Frequency({kGoldenMean}); }

    int dimension() const { return (int)alpha_.size(); }
    const std::vector<double>& alpha() const { return alpha_; }
    double operator[](int i) const { return alpha_[i]; }

    // <k, alpha>, not reduced.
    double pairing(const MultiIndex& k) const { return dot(k, alpha_); }

    // theta + n*alpha on T^d.
    TorusPoint advance(const TorusPoint& theta, long n = 1) const {
        if (theta.size() != alpha_.size())
            throw std::invalid_argument("Frequency: point of wrong dimension");
        TorusPoint out(theta.size());
        for (std::size_t i = 0; i < theta.size(); ++i)
            out[i] = wrap_unit(theta[i] + (double)n * alpha_[i]);
        return out;
    }

  private:
    std::vector<double> alpha_;
};

struct DiophantineEstimate {
    double gamma;  // minimal observed ||<k,alpha>|| * |k|^tau
    double tau;    // log-log slope fitted on record minima
    MultiIndex worst_k;
    double worst_value;  // ||<k,alpha>|| at worst_k
};

// Best constants (gamma, tau) fitting ||<k,alpha>|| >= gamma / |k|^tau over
// 0 < |k|_inf <= k_max. tau comes from least squares on the record minima of
// s -> min_{|k|_inf = s} ||<k,alpha>||; gamma is then the minimal ratio.
inline DiophantineEstimate diophantine_diagnostic(const Frequency& alpha, int k_max) {
    if (k_max < 1) throw std::invalid_argument("diophantine_diagnostic: k_max must be >= 1");
    const int d = alpha.dimension();
    std::vector<double> shell_min(k_max + 1, 2.0);
    for_each_in_box(d, k_max, [&](const MultiIndex& k) {
        if (is_zero(k)) return;
        int s = norm_inf(k);
        double v = torus_dist(alpha.pairing(k));
        if (v < shell_min[s]) shell_min[s] = v;
    });

    // record minima: shells strictly below everything before them
    std::vector<std::pair<int, double>> records;
    double running = 2.0;
    for (int s = 1; s <= k_max; ++s) {
        if (shell_min[s] < running) {
            running = shell_min[s];
            records.push_back({s, shell_min[s]});
        }
    }

    double tau = 1.0;
    if (records.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (auto [s, m] : records) {
            double lx = std::log((double)s), ly = std::log(m);
            sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        }
        double n = (double)records.size();
        double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        tau = std::max(0.0, -slope);
    }

    DiophantineEstimate est;
    est.tau = tau;
    est.gamma = 2.0;
    est.worst_value = 2.0;
    for_each_in_box(d, k_max, [&](const MultiIndex& k) {
        if (is_zero(k)) return;
        double v = torus_dist(alpha.pairing(k));
        double ratio = v * std::pow((double)norm_inf(k), tau);
        if (ratio < est.gamma) {
            est.gamma = ratio;
            est.worst_k = k;
            est.worst_value = v;
        }
    });
    return est;
}

}  // namespace qplab
