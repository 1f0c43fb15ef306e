#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ehpa/bellman.hpp"
#include "ehpa/models.hpp"
#include "ehpa/policy.hpp"
#include "ehpa/pwl.hpp"

namespace ehpa {

struct PlannerOptions {
    double delta = 0.1;
    double alpha = 1e-4;
    /// Infinite horizon only; default 10 * ceil(log_gamma(alpha / d_1)), at least 500.
    std::optional<std::size_t> max_iters;
    BackupOptions backup;
    /// Called after every backup with the 1-based iteration count and its result.
    std::function<void(std::size_t, const BackupResult&)> on_iteration;
};

/// Stored value functions for online allocation.
struct PolicyTable {
    enum class Kind { finite, infinite };

    Kind kind = Kind::finite;
    /// finite: W^1..W^K (index k - 1); infinite: the converged function only.
    std::vector<PwlValue> values;
    /// finite: eps_k per slot (index k - 1); infinite: per iteration.
    std::vector<double> error_bounds;
    /// finite: accumulated bound of W^k (index k - 1); infinite: per iteration.
    std::vector<double> accumulated_bounds;
    /// infinite: sup-distance between successive iterates.
    std::vector<double> trace;
    std::size_t iterations = 0;
    double delta = 0.0;
    double alpha = 0.0;
    double gamma = 1.0;
    std::string fingerprint;

    std::size_t horizon() const { return kind == Kind::finite ? values.size() : 0; }
    /// The value function used for decisions in slot k (1-based; any k for infinite tables).
    const PwlValue& value(std::size_t k) const;
    /// Bound on the value-function error at the first slot (finite) or of the fixed point (infinite).
    double value_error_bound() const;
};

/// FNV-1a over the canonical scenario description and the grid parameters, as 16 hex digits.
std::string scenario_fingerprint(const Scenario& s, double delta, double alpha);

PolicyTable plan_finite(const Scenario& s, const PlannerOptions& opt = {});
/// Throws ConvergenceError (with the trace) when max_iters is exhausted.
PolicyTable plan_infinite(const Scenario& s, const PlannerOptions& opt = {});
PolicyTable plan(const Scenario& s, const PlannerOptions& opt = {});

/// (gamma alpha + beta) / (1 - gamma), beta the curvature term of the converged function.
double fixed_point_bound(const PolicyTable& table, double alpha, double gamma);

/// Online allocator over a table; caches one continuation profile per slot.
class Allocator final : public Policy {
public:
    /// Throws ConfigError when the table was planned for a different scenario.
    Allocator(const PolicyTable& table, const Scenario& s, bool force_bisection = false, std::string label = {});

    std::string name() const override { return label_; }
    double power(const Observation& obs) const override;
    /// The staircase used for the decision at `obs` (A must be granted).
    SegmentedDerivative staircase(const Observation& obs) const;

private:
    ProfileWindow window(const Observation& obs) const;
    void check(const Observation& obs) const;

    const Scenario* scenario_;
    std::vector<ContinuationProfile> profiles_;
    bool finite_;
    bool force_bisection_;
    std::string label_;
};

double allocate(const PolicyTable& table, const Observation& obs, const Scenario& s);

void save_table(std::ostream& out, const PolicyTable& table);
/// Throws ConfigError on malformed input.
PolicyTable load_table(std::istream& in);

struct TableReport {
    bool valid = true;
    std::vector<std::string> problems;
    std::string kind;
    std::size_t blocks = 0;
};

/// Machine check of the persisted table schema (never throws on bad content).
TableReport validate_table(std::istream& in);

}  // namespace ehpa
