#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ehpa/errors.hpp"
#include "ehpa/models.hpp"
#include "ehpa/pwl.hpp"

namespace ehpa {

/// Concave piecewise-linear p -> gamma * U(B, p, A) on [0, p_N]: breakpoints
/// p_0 = 0 < ... < p_N and non-increasing slopes, one per segment.
struct SegmentedDerivative {
    std::vector<double> breakpoints;  // N + 1 entries (a single 0 when the decision set is {0})
    std::vector<double> slopes;       // N entries
    double intercept = 0.0;           // value at p = 0

    std::size_t segments() const { return slopes.size(); }
    double breakpoint(std::size_t i) const { return breakpoints[i]; }
    double slope(std::size_t i) const { return slopes[i]; }
    double upper() const { return breakpoints.back(); }
    double value(double p) const;
};

class ProfileWindow;

/// Continuation value as a function of the post-transfer battery x = B + e - p T_c:
/// F(x) = sum_{A'} Pr(A' | A) sum_j pi_j W(min(b_max, x + eps_j), A').
/// Exactly piecewise linear with knots at {grid level - eps_j}; constant past
/// the last knot.
class ContinuationProfile {
public:
    ContinuationProfile(const PwlValue& next, std::span<const double> error_atoms, std::span<const double> error_probs,
                        std::array<double, 2> next_access);

    double operator()(double x) const;
    std::span<const double> knots() const { return knots_; }
    std::span<const double> values() const { return values_; }
    /// Slope of F on [knot j, knot j+1]; 0 for the last knot (constant continuation).
    double interval_slope(std::size_t j) const { return slopes_[j]; }
    /// Largest j with knot(j) <= x (x is clamped to the first knot).
    std::size_t interval_of(double x) const;

    /// Staircase in p of gamma * F(B + e - p T_c) on [0, min(p_max, B / T_c)].
    ProfileWindow window(double battery, double harvest, double p_max, double slot_length, double gamma) const;

private:
    std::vector<double> knots_;
    std::vector<double> values_;
    std::vector<double> slopes_;
};

/// Lazy staircase view of a profile for one battery level; random access in O(1).
class ProfileWindow {
public:
    ProfileWindow(const ContinuationProfile& profile, double x_hi, double p_hi, double slot_length, double gamma);

    std::size_t segments() const { return p_hi_ > 0.0 ? count_ + 1 : 0; }
    double breakpoint(std::size_t i) const {
        if (i == 0) return 0.0;
        if (i > count_) return p_hi_;
        return (x_hi_ - profile_->knots()[hi_ - i]) / slot_length_;
    }
    double slope(std::size_t i) const {
        return 0.0 - gamma_ * slot_length_ * profile_->interval_slope(hi_ - 1 - i);
    }
    double upper() const { return p_hi_; }
    double intercept() const { return gamma_ * (*profile_)(x_hi_); }
    /// gamma * U at power p.
    double value(double p) const { return gamma_ * (*profile_)(x_hi_ - p * slot_length_); }

    /// Copy into a SegmentedDerivative, merging equal consecutive slopes.
    SegmentedDerivative materialize() const;

private:
    const ContinuationProfile* profile_;
    double x_hi_;
    double p_hi_;
    double slot_length_;
    double gamma_;
    std::size_t hi_ = 0;     // first knot index at or above x_hi (within tolerance)
    std::size_t count_ = 0;  // knots strictly inside the window
};

namespace staircase_detail {

template <class S>
double inverse_slope(const S& s, std::size_t i) {
    const double w = s.slope(i);
    return w < 0.0 ? -1.0 / w : std::numeric_limits<double>::infinity();
}

}  // namespace staircase_detail

/// argmax_p log(1 + p h) + gamma U(p) for a staircase `s`. Binary search for the
/// first segment whose right end already has non-positive marginal value.
template <class S>
double water_fill(const S& s, double h) {
    if (!(h >= 0.0)) throw DomainError("channel gain must be non-negative, got " + std::to_string(h));
    const std::size_t n = s.segments();
    if (h == 0.0 || n == 0) return 0.0;
    const double u = 1.0 / h;
    std::size_t lo = 0, hi = n;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (staircase_detail::inverse_slope(s, mid) - s.breakpoint(mid + 1) <= u) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    if (lo == n) return s.breakpoint(n);
    return std::max(s.breakpoint(lo), staircase_detail::inverse_slope(s, lo) - u);
}

/// Channel gains at which the water-filling solution changes regime, ascending.
template <class S>
std::vector<double> channel_breakpoints(const S& s) {
    std::vector<double> out;
    const std::size_t n = s.segments();
    out.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double inv = staircase_detail::inverse_slope(s, i);
        if (!std::isfinite(inv)) continue;
        for (double t : {inv - s.breakpoint(i), inv - s.breakpoint(i + 1)}) {
            if (t > 0.0) out.push_back(1.0 / t);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace staircase_detail {

// Segment to the right of p (p < upper) and to the left of p (p > 0).
template <class S>
std::size_t segment_right_of(const S& s, double p) {
    std::size_t lo = 0, hi = s.segments() - 1;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (s.breakpoint(mid + 1) > p) hi = mid; else lo = mid + 1;
    }
    return lo;
}

template <class S>
std::size_t segment_left_of(const S& s, double p) {
    std::size_t lo = 0, hi = s.segments() - 1;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (s.breakpoint(mid + 1) >= p) hi = mid; else lo = mid + 1;
    }
    return lo;
}

}  // namespace staircase_detail

/// argmax_p r(p, h) + gamma U(p) on [0, upper] for a general concave payoff,
/// by bisection on the one-sided derivative signs. Throws ContractError when
/// the derivatives reveal a convex kink.
template <class S>
double bisection_allocation(const S& s, const PayoffModel& payoff, double h) {
    if (!(h >= 0.0)) throw DomainError("channel gain must be non-negative, got " + std::to_string(h));
    if (s.segments() == 0) return 0.0;
    const double p_hi = s.upper();
    auto right = [&](double p) {
        return payoff.right_derivative(p, h) + s.slope(staircase_detail::segment_right_of(s, p));
    };
    auto left = [&](double p) {
        return payoff.left_derivative(p, h) + s.slope(staircase_detail::segment_left_of(s, p));
    };
    if (right(0.0) <= 0.0) return 0.0;
    if (left(p_hi) >= 0.0) return p_hi;
    double lo = 0.0, hi = p_hi;
    const double width = 1e-10 * p_hi;
    while (hi - lo > width) {
        const double mid = 0.5 * (lo + hi);
        const double gr = right(mid);
        const double gl = left(mid);
        if (gl < gr - 1e-12 * (1.0 + std::abs(gl) + std::abs(gr))) {
            throw ContractError("objective is not concave in p near p = " + std::to_string(mid));
        }
        if (gr > 0.0) {
            lo = mid;
        } else if (gl < 0.0) {
            hi = mid;
        } else {
            return mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace ehpa
