#pragma once

// Scalar cohomological equation on T^d:
//     c(theta + alpha) - e^{2 pi i beta} c(theta) = rhs(theta),
// solved mode by mode: c_k = rhs_k / (e^{2 pi i <k,alpha>} - e^{2 pi i beta}).
// Modes whose divisor magnitude is at or below the floor are returned as
// resonant data instead of being regularized away.

#include <complex>
#include <vector>

#include "qplab/fourier.hpp"
#include "qplab/frequency.hpp"

namespace qplab {

struct ResonantMode {
    MultiIndex k;
    double divisor_magnitude;
    Complex rhs_coeff;
};

struct CohomologicalSolution {
    FourierSeries<Complex> c;
    std::vector<ResonantMode> resonant;
};

inline CohomologicalSolution cohomological_solve(Complex beta, const Frequency& alpha,
                                                 const FourierSeries<Complex>& rhs,
                                                 double divisor_floor) {
    if (rhs.dimension() != alpha.dimension())
        throw std::invalid_argument("cohomological_solve: dimension mismatch");
    const Complex mult = std::exp(Complex(0, 1) * kTwoPi * beta);
    CohomologicalSolution out{FourierSeries<Complex>(rhs.dimension(), rhs.truncation()), {}};
    for (const auto& [k, r] : rhs.coeffs()) {
        Complex divisor = std::polar(1.0, kTwoPi * alpha.pairing(k)) - mult;
        if (std::abs(divisor) <= divisor_floor) {
            out.resonant.push_back({k, std::abs(divisor), r});
            out.c.set(k, Complex(0));
        } else {
            out.c.set(k, r / divisor);
        }
    }
    return out;
}

}  // namespace qplab
