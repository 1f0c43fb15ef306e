#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "ehpa/models.hpp"
#include "ehpa/pwl.hpp"
#include "ehpa/random.hpp"
#include "ehpa/staircase.hpp"

namespace ehpa::testing {

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

/// Non-decreasing concave samples on `grid` for both access states.
inline PwlValue random_concave(const BatteryGrid& grid, Rng& rng, double scale = 1.0) {
    std::array<std::vector<double>, 2> samples;
    for (auto& v : samples) {
        const std::size_t n = grid.size();
        std::vector<double> inc(n > 1 ? n - 1 : 0);
        double slope = scale * uniform(rng, 0.0, 1.0);
        for (auto& d : inc) {
            d = slope * grid.delta();
            slope *= uniform(rng, 0.6, 1.0);
            if (rng.uniform() < 0.1) slope = 0.0;
        }
        v.assign(n, 0.0);
        v[0] = scale * uniform(rng, 0.0, 2.0);
        for (std::size_t i = 1; i < n; ++i) v[i] = v[i - 1] + inc[i - 1];
    }
    return PwlValue(grid, samples[0], samples[1]);
}

/// Random concave staircase: `n` segments, non-positive non-increasing slopes.
inline SegmentedDerivative random_staircase(Rng& rng, std::size_t n) {
    SegmentedDerivative d;
    d.breakpoints.push_back(0.0);
    double p = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        p += uniform(rng, 0.05, 2.0);
        d.breakpoints.push_back(p);
    }
    double w = rng.uniform() < 0.2 ? 0.0 : -uniform(rng, 0.0, 0.8);
    for (std::size_t i = 0; i < n; ++i) {
        d.slopes.push_back(w);
        w -= rng.uniform() < 0.3 ? 0.0 : uniform(rng, 0.0, 0.8);
    }
    d.intercept = uniform(rng, 0.0, 3.0);
    return d;
}

/// max of log(1 + p h) + d(p) over an evenly spaced grid of `points` powers.
inline double grid_max(const SegmentedDerivative& d, double h, std::size_t points) {
    double best = -INFINITY;
    const double top = d.upper();
    for (std::size_t i = 0; i < points; ++i) {
        const double p = top * static_cast<double>(i) / static_cast<double>(points - 1);
        best = std::max(best, std::log1p(p * h) + d.value(p));
    }
    return best;
}

/// Deterministic scenario with per-slot degenerate channels, access always granted and no
/// prediction error.
inline Scenario deterministic_scenario(std::vector<double> gains, std::vector<double> harvest, double b0, double p_max,
                                       double b_max, double gamma = 1.0) {
    Scenario s;
    s.horizon = gains.size();
    for (double h : gains) s.channels.push_back(ChannelLaw::degenerate(h));
    s.access = AccessChain(0.0, 1.0);
    s.initial_access = Access::granted;
    s.harvest = HarvestSchedule(std::move(harvest), ErrorLaw::none());
    s.b0 = b0;
    s.p_max = p_max;
    s.b_max = b_max;
    s.gamma = gamma;
    s.validate();
    return s;
}

/// Exhaustive (p1, p2) grid search for a two-slot deterministic scenario.
inline double exhaustive_two_slot(const Scenario& s, std::size_t points = 2001) {
    const double h1 = s.channel(0).atoms()[0], h2 = s.channel(1).atoms()[0];
    const double t = s.slot_length;
    const double p1_top = std::min(s.p_max, s.b0 / t);
    double best = -INFINITY;
    for (std::size_t i = 0; i < points; ++i) {
        const double p1 = p1_top * static_cast<double>(i) / static_cast<double>(points - 1);
        const double b2 = std::min(s.b_max, s.b0 - p1 * t + s.prediction(0));
        const double p2_top = std::min(s.p_max, std::max(0.0, b2) / t);
        const double first = std::log1p(p1 * h1);
        for (std::size_t j = 0; j < points; ++j) {
            const double p2 = p2_top * static_cast<double>(j) / static_cast<double>(points - 1);
            best = std::max(best, first + s.gamma * std::log1p(p2 * h2));
        }
    }
    return best;
}

inline double objective(const SegmentedDerivative& d, double p, double h) { return std::log1p(p * h) + d.value(p); }

}  // namespace ehpa::testing
