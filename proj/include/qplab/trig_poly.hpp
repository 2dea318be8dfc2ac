#pragma once

// Real trigonometric polynomials v(theta) = sum_{|k|<=l} v_k e^{2 pi i k theta}
// on the 1-torus. Conjugate symmetry v_{-k} = conj(v_k) is required at
// construction; the top coefficient must be nonzero (the companion matrix
// divides by it).

#include <complex>
#include <stdexcept>
#include <vector>

#include "qplab/torus.hpp"

namespace qplab {

using Complex = std::complex<double>;
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

class TrigPoly {
  public:
    // coeffs[j] is v_{j-degree}, j = 0..2*degree (ascending mode order).
    TrigPoly(int degree, std::vector<Complex> coeffs) : degree_(degree), c_(std::move(coeffs)) {
        if (degree_ < 1) throw std::invalid_argument("TrigPoly: degree must be positive");
        if ((int)c_.size() != 2 * degree_ + 1)
            throw std::invalid_argument("TrigPoly: need 2*degree+1 coefficients");
        for (int k = 0; k <= degree_; ++k) {
            if (std::abs(coeff(-k) - std::conj(coeff(k))) > 1e-12)
                throw std::invalid_argument("TrigPoly: coefficients are not conjugate-symmetric");
        }
        if (std::abs(coeff(degree_)) < 1e-14)
            throw std::invalid_argument("TrigPoly: top coefficient vanishes, degree not exact");
    }

    // v(theta) = 2 cos(2 pi theta): v_{+-1} = 1, v_0 = 0.
    static TrigPoly cosine() { return TrigPoly(1, {Complex(1), Complex(0), Complex(1)}); }

    int degree() const { return degree_; }
    Complex coeff(int k) const {
        if (std::abs(k) > degree_) return Complex(0);
        return c_[k + degree_];
    }

    Complex evaluate_complex(double theta) const {
        Complex s(0);
        for (int k = -degree_; k <= degree_; ++k)
            s += coeff(k) * std::polar(1.0, kTwoPi * k * theta);
        return s;
    }
    double evaluate(double theta) const { return evaluate_complex(theta).real(); }

  private:
    int degree_;
    std::vector<Complex> c_;
};

}  // namespace qplab
