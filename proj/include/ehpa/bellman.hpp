#pragma once

#include <iosfwd>
#include <span>

#include "ehpa/models.hpp"
#include "ehpa/pwl.hpp"
#include "ehpa/quadrature.hpp"
#include "ehpa/staircase.hpp"

namespace ehpa {

/// Profile of the continuation value from the current access state `current`.
ContinuationProfile make_profile(const PwlValue& next, const ErrorLaw& error, const AccessChain& chain,
                                 Access current);

/// gamma * U(B, p, A) on the decision set [0, min(p_max, B / T_c)] as an explicit staircase.
SegmentedDerivative build_future_value(const PwlValue& next, double battery, double harvest, const ErrorLaw& error,
                                       const AccessChain& chain, Access current, double slot_length, double gamma,
                                       double p_max);

/// Water-filling on a materialized staircase.
double closed_form_allocation(const SegmentedDerivative& d, double h);

struct BackupOptions {
    /// Solve the log-rate problem by bisection too (cross-checking).
    bool force_bisection = false;
    quad::Options quadrature{1e-10, 1e-14, 4000};
};

struct BackupResult {
    PwlValue value;
    double error_bound;
};

/// One application of the approximate Bellman operator for slot model `m`.
BackupResult backup(const PwlValue& next, const SlotModel& m, const BackupOptions& opt = {});

/// max_A [2 V(delta, A) - V(2 delta, A) - V(0, A)], clamped at 0.
double approximation_error_bound(const PwlValue& v);

/// sum_j gamma^(i-j) eps_j over the series eps_1..eps_i.
double accumulated_error_bound(std::span<const double> per_iteration, double gamma);

/// Plain-text table of the staircase (breakpoint, slope) per grid level and access state.
void dump_staircases(std::ostream& out, const PwlValue& next, const SlotModel& m);

}  // namespace ehpa
