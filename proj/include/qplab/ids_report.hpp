#pragma once

// Empirical modulus of continuity for the integrated density of states:
// sliding-window increments at several widths. A jump candidate must both
// dominate its peers (five times the median increment at the same width)
// and carry macroscopic mass: genuine atoms keep an O(1) increment as the
// width shrinks, while van Hove density spikes fall below the mass floor.

#include <algorithm>
#include <vector>

#include "qplab/lattice.hpp"

namespace qplab {

struct WindowScan {
    double width;
    double max_increment;
    double median_increment;
    double jump_floor;                      // absolute mass bar for a flag
    std::vector<double> flagged_positions;  // left ends of jump-candidate windows
};

// sorted_union: eigenvalues pooled over phases; denom = phases * box size.
inline WindowScan scan_ids_windows(const std::vector<double>& sorted_union, double denom,
                                   double width, double jump_floor = 0.05) {
    WindowScan scan{width, 0.0, 0.0, jump_floor, {}};
    if (sorted_union.empty() || denom <= 0) return scan;
    const double lo = sorted_union.front() - width;
    const double hi = sorted_union.back();
    const double step = width / 2;
    std::vector<double> increments;
    std::vector<double> positions;
    for (double t = lo; t <= hi; t += step) {
        auto a = std::upper_bound(sorted_union.begin(), sorted_union.end(), t);
        auto b = std::upper_bound(sorted_union.begin(), sorted_union.end(), t + width);
        increments.push_back((double)(b - a) / denom);
        positions.push_back(t);
    }
    std::vector<double> byval = increments;
    std::nth_element(byval.begin(), byval.begin() + (long)byval.size() / 2, byval.end());
    scan.median_increment = byval[byval.size() / 2];
    for (std::size_t i = 0; i < increments.size(); ++i) {
        scan.max_increment = std::max(scan.max_increment, increments[i]);
        if (increments[i] > 5.0 * scan.median_increment && increments[i] >= jump_floor)
            scan.flagged_positions.push_back(positions[i]);
    }
    return scan;
}

struct IdsContinuityReport {
    EmpiricalIDS ids;
    std::vector<WindowScan> scans;

    bool flagged_at(double width) const {
        for (const auto& s : scans)
            if (s.width == width) return !s.flagged_positions.empty();
        return false;
    }
};

inline IdsContinuityReport ids_continuity_report(const LongRangeSpec& base,
                                                 std::vector<double> energy_grid,
                                                 const std::vector<double>& phases,
                                                 std::vector<double> widths = {1e-1, 1e-2,
                                                                               1e-3}) {
    if (phases.empty()) throw std::invalid_argument("ids_continuity_report: need phases");
    std::vector<double> pooled;
    long card = 0;
    for (double x : phases) {
        LongRangeSpec spec = base;
        spec.x = wrap_unit(x);
        auto op = assemble_long_range(spec);
        card = op.box.cardinality();
        Eigen::VectorXd ev = eigenvalues_of(op);
        for (Eigen::Index i = 0; i < ev.size(); ++i) pooled.push_back(ev(i));
    }
    std::sort(pooled.begin(), pooled.end());

    IdsContinuityReport rep;
    std::sort(energy_grid.begin(), energy_grid.end());
    rep.ids.energies = energy_grid;
    rep.ids.values.resize(energy_grid.size());
    double denom = (double)phases.size() * (double)card;
    for (std::size_t g = 0; g < energy_grid.size(); ++g) {
        auto cnt = std::upper_bound(pooled.begin(), pooled.end(), energy_grid[g]) -
                   pooled.begin();
        rep.ids.values[g] = (double)cnt / denom;
    }
    rep.ids.N = base.N;
    rep.ids.phase_count = (int)phases.size();
    for (double w : widths) rep.scans.push_back(scan_ids_windows(pooled, denom, w));
    return rep;
}

}  // namespace qplab
