#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ehpa/models.hpp"
#include "ehpa/policy.hpp"

namespace ehpa {

struct SlotRecord {
    double b;
    double h;
    Access access;
    double error;
    double power;
    double payoff;
};

struct TrialRecord {
    std::uint64_t seed = 0;
    std::vector<SlotRecord> slots;
    /// sum_k gamma^(k-1) r(p_k, h_k)
    double total = 0.0;
};

/// Slots simulated per trial: K for finite scenarios, ceil(log_gamma(1e-6)) otherwise.
std::size_t evaluation_horizon(const Scenario& s);

/// Runs `policy` on a given realization. Throws ContractError naming the policy
/// and slot when an action is infeasible.
TrialRecord run_trial(const Policy& policy, const Scenario& s, const Realization& r, std::uint64_t seed = 0);
/// Samples the realization from `seed` first.
TrialRecord run_trial(const Policy& policy, const Scenario& s, std::uint64_t seed, std::size_t horizon);

struct EvalSummary {
    std::string policy;
    std::size_t trials = 0;
    double mean = 0.0;
    double stderr_ = 0.0;
    /// Per-trial totals in seed order (kept for paired comparisons).
    std::vector<double> totals;
};

/// Mean and standard error (sample std / sqrt(n)) of a list of totals; n >= 2.
EvalSummary summarize(std::string policy, std::vector<double> totals);

/// Seeds base_seed .. base_seed + trials - 1, shared across policies.
EvalSummary evaluate(const Policy& policy, const Scenario& s, std::size_t trials, std::uint64_t base_seed);

struct PairedDifference {
    double mean = 0.0;
    double stderr_ = 0.0;
};

/// Statistics of a.totals[i] - b.totals[i].
PairedDifference paired_difference(const EvalSummary& a, const EvalSummary& b);

/// One CSV result row; an empty upper bound is written as a blank field.
struct CsvRow {
    std::string sweep;
    std::string policy;
    double mean;
    double stderr_;
    std::size_t trials;
    std::optional<double> upper_bound;
};

void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const CsvRow& row);

}  // namespace ehpa
