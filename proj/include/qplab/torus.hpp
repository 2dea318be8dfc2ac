#pragma once

// Torus arithmetic on T^d = (R/Z)^d. All angles are stored as
// representatives in [0,1); reduction is round-to-nearest subtraction.

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace qplab {

using MultiIndex = std::vector<int>;  // lattice vector k in Z^d
using TorusPoint = std::vector<double>;

// Representative of x mod Z in [0,1).
inline double wrap_unit(double x) {
    double r = x - std::floor(x);
    if (r >= 1.0) r -= 1.0;  // floor rounding edge
    return r;
}

// Distance from x to the nearest integer, in [0, 1/2].
inline double torus_dist(double x) {
    return std::fabs(x - std::round(x));
}

inline TorusPoint wrap_point(TorusPoint p) {
    for (double& x : p) x = wrap_unit(x);
    return p;
}

// <k, theta> for k in Z^d, theta in T^d (not reduced mod Z).
inline double dot(const MultiIndex& k, const TorusPoint& theta) {
    if (k.size() != theta.size())
        throw std::invalid_argument("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) s += k[i] * theta[i];
    return s;
}

inline int norm_inf(const MultiIndex& k) {
    int m = 0;
    for (int c : k) m = std::max(m, std::abs(c));
    return m;
}

inline int norm_one(const MultiIndex& k) {
    int s = 0;
    for (int c : k) s += std::abs(c);
    return s;
}

inline MultiIndex negate(MultiIndex k) {
    for (int& c : k) c = -c;
    return k;
}

inline bool is_zero(const MultiIndex& k) {
    for (int c : k) if (c != 0) return false;
    return true;
}

// Iterate over the box |k|_inf <= radius in Z^d in lexicographic order.
// Calls f(const MultiIndex&) for every point.
template <class F>
void for_each_in_box(int d, int radius, F&& f) {
    MultiIndex k(d, -radius);
    while (true) {
        f(const_cast<const MultiIndex&>(k));
        int axis = d - 1;
        while (axis >= 0) {
            if (++k[axis] <= radius) break;
            k[axis] = -radius;
            --axis;
        }
        if (axis < 0) break;
    }
}

}  // namespace qplab
