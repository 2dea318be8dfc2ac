#pragma once

// Exponential decay fits for eigenvectors: least squares of log|u_n|
// against |n - center|_inf over the sites that are visible above the
// rounding floor and clear of the box boundary.

#include <cmath>
#include <string>

#include "qplab/duality.hpp"

namespace qplab {

struct DecayFit {
    double rate = 0;       // per-site exponential rate (positive = decaying)
    double intercept = 0;
    double r2 = 0;
    MultiIndex center;
    int points = 0;        // sites entering the fit
    bool localized = false;
    std::string verdict;
};

inline DecayFit fit_decay(const LatticeVector& u, int boundary_margin) {
    DecayFit out;
    const Box& box = u.box;
    double umax = 0;
    long center_idx = 0;
    for (long i = 0; i < box.cardinality(); ++i) {
        double a = std::abs(u.values((Eigen::Index)i));
        if (a > umax) { umax = a; center_idx = i; }
    }
    out.center = box.site(center_idx);
    if (umax <= 0) {
        out.verdict = "zero vector";
        return out;
    }

    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    int n = 0;
    for (long i = 0; i < box.cardinality(); ++i) {
        double a = std::abs(u.values((Eigen::Index)i));
        if (a <= 1e-12 * umax) continue;
        MultiIndex site = box.site(i);
        if (!box.is_interior(site, boundary_margin)) continue;
        MultiIndex rel = site;
        for (int ax = 0; ax < box.d; ++ax) rel[ax] -= out.center[ax];
        double x = (double)norm_inf(rel);
        double y = std::log(a);
        sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
        ++n;
    }
    out.points = n;
    if (n < 10) {
        out.verdict = "insufficient range";
        return out;
    }
    double denom = n * sxx - sx * sx;
    if (denom <= 0) {
        out.verdict = "degenerate window";
        return out;
    }
    double slope = (n * sxy - sx * sy) / denom;
    out.rate = -slope;
    out.intercept = (sy - slope * sx) / n;
    double ss_tot = syy - sy * sy / n;
    double ss_res = 0;
    // second pass for the residual sum
    for (long i = 0; i < box.cardinality(); ++i) {
        double a = std::abs(u.values((Eigen::Index)i));
        if (a <= 1e-12 * umax) continue;
        MultiIndex site = box.site(i);
        if (!box.is_interior(site, boundary_margin)) continue;
        MultiIndex rel = site;
        for (int ax = 0; ax < box.d; ++ax) rel[ax] -= out.center[ax];
        double y = std::log(a);
        double fit = out.intercept + slope * (double)norm_inf(rel);
        ss_res += (y - fit) * (y - fit);
    }
    out.r2 = ss_tot > 1e-12 * n ? 1.0 - ss_res / ss_tot : 0.0;
    out.localized = out.r2 >= 0.9 && out.rate > 1e-9;
    out.verdict = out.localized ? "exponentially localized"
                                : "not exponentially localized at this scale";
    return out;
}

}  // namespace qplab
