#pragma once

// Real analytic symbols w on T^d stored through finitely many Fourier
// coefficients w_k, |k|_inf <= R. Exponential decay |w_k| <= C e^{-c|k|}
// is a diagnostic, not an enforced constraint: the stored constants are
// checked against the data and violations are reported.

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

#include "qplab/torus.hpp"
#include "qplab/trig_poly.hpp"

namespace qplab {

class DecayingSymbol {
  public:
    using CoeffMap = std::map<MultiIndex, Complex>;

    DecayingSymbol(int dimension, int radius, CoeffMap coeffs, double decay_C = 0.0,
                   double decay_c = 0.0)
        : d_(dimension), R_(radius), coeffs_(std::move(coeffs)), C_(decay_C), c_(decay_c) {
        if (d_ < 1) throw std::invalid_argument("DecayingSymbol: dimension must be positive");
        if (R_ < 1) throw std::invalid_argument("DecayingSymbol: radius must be positive");
        for (const auto& [k, w] : coeffs_) {
            if ((int)k.size() != d_)
                throw std::invalid_argument("DecayingSymbol: mode of wrong dimension");
            if (norm_inf(k) > R_)
                throw std::invalid_argument("DecayingSymbol: mode outside radius");
            auto it = coeffs_.find(negate(k));
            Complex wm = (it == coeffs_.end()) ? Complex(0) : it->second;
            if (std::abs(wm - std::conj(w)) > 1e-12)
                throw std::invalid_argument("DecayingSymbol: coefficients not conjugate-symmetric");
        }
        if (C_ <= 0.0 || c_ <= 0.0) estimate_decay();
    }

    // w(theta) = 2 cos(2 pi theta_1): modes +-e_1.
    static DecayingSymbol cosine(int dimension = 1, int radius = 1) {
        CoeffMap m;
        MultiIndex e(dimension, 0);
        e[0] = 1;
        m[e] = Complex(1);
        m[negate(e)] = Complex(1);
        return DecayingSymbol(dimension, radius, std::move(m));
    }

    static DecayingSymbol constant(double value, int dimension = 1) {
        CoeffMap m;
        m[MultiIndex(dimension, 0)] = Complex(value);
        return DecayingSymbol(dimension, 1, std::move(m));
    }

    int dimension() const { return d_; }
    int radius() const { return R_; }
    double decay_C() const { return C_; }
    double decay_c() const { return c_; }
    const CoeffMap& coeffs() const { return coeffs_; }

    Complex coeff(const MultiIndex& k) const {
        auto it = coeffs_.find(k);
        return it == coeffs_.end() ? Complex(0) : it->second;
    }

    Complex evaluate_complex(const TorusPoint& theta) const {
        if ((int)theta.size() != d_)
            throw std::invalid_argument("DecayingSymbol: point of wrong dimension");
        Complex s(0);
        for (const auto& [k, w] : coeffs_) s += w * std::polar(1.0, kTwoPi * dot(k, theta));
        return s;
    }
    double evaluate(const TorusPoint& theta) const { return evaluate_complex(theta).real(); }

    // Modes violating |w_k| <= C e^{-c|k|_inf}.
    std::vector<MultiIndex> decay_violations() const {
        std::vector<MultiIndex> out;
        for (const auto& [k, w] : coeffs_)
            if (std::abs(w) > C_ * std::exp(-c_ * norm_inf(k)) * (1.0 + 1e-12)) out.push_back(k);
        return out;
    }

    // The reflected symbol theta -> w(-theta): coefficient map k -> w_{-k}.
    // Equals *this exactly when w is even (all cosine models).
    DecayingSymbol reflected() const {
        CoeffMap m;
        for (const auto& [k, w] : coeffs_) m[negate(k)] = w;
        return DecayingSymbol(d_, R_, std::move(m), C_, c_);
    }

    // theta -> w(theta + shift): coefficient k picks up e^{2 pi i <k,shift>}.
    DecayingSymbol translated(const TorusPoint& shift) const {
        CoeffMap m;
        for (const auto& [k, w] : coeffs_) m[k] = w * std::polar(1.0, kTwoPi * dot(k, shift));
        return DecayingSymbol(d_, R_, std::move(m), C_, c_);
    }

  private:
    // Upper-envelope fit of log|w_k| against |k|_inf.
    void estimate_decay() {
        std::map<int, double> env;
        for (const auto& [k, w] : coeffs_) {
            double a = std::abs(w);
            if (a <= 0.0) continue;
            int s = norm_inf(k);
            auto it = env.find(s);
            if (it == env.end() || it->second < a) env[s] = a;
        }
        if (env.empty()) { C_ = 1.0; c_ = 1.0; return; }
        if (env.size() == 1) {
            C_ = env.begin()->second * std::exp((double)env.begin()->first);
            c_ = 1.0;
            return;
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& [s, a] : env) {
            double y = std::log(a);
            sx += s; sy += y; sxx += (double)s * s; sxy += s * y;
        }
        double n = (double)env.size();
        double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        c_ = std::max(1e-6, -slope);
        C_ = 0.0;
        for (const auto& [s, a] : env) C_ = std::max(C_, a * std::exp(c_ * s));
    }

    int d_, R_;
    CoeffMap coeffs_;
    double C_, c_;
};

}  // namespace qplab
