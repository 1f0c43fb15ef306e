#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ehpa/config.hpp"
#include "ehpa/models.hpp"
#include "ehpa/planner.hpp"
#include "ehpa/sim.hpp"

namespace ehpa {

/// Finite-horizon scenario: K = 30, gamma = 1, truncated-Gaussian predictions
/// (variance 2) drawn once from `harvest_seed`, Rayleigh(sigma) channel.
Scenario finite_scenario(double harvest_mean, double sigma, std::uint64_t harvest_seed = 1);
/// Infinite-horizon scenario with constant harvest 3.
Scenario infinite_scenario(double sigma, double gamma);
/// K = 10, gamma = 1, e = 3.5, uniform error on [-v, v] (step 0.1), access never lost.
Scenario prediction_error_scenario(double v, double sigma = 1.0);

struct PolicyResult {
    EvalSummary summary;
    std::optional<double> upper_bound;
};

struct SweepPoint {
    std::string label;
    /// proposed per delta, then dmdp per delta, then greedy and balanced.
    std::vector<PolicyResult> results;
    const PolicyResult& find(const std::string& policy) const;
};

/// Plans every policy for `s` and evaluates them on shared seeds.
SweepPoint evaluate_policies(const Scenario& s, const std::vector<double>& deltas, double alpha, std::size_t trials,
                             std::uint64_t seed, const std::string& label);

struct PredictionErrorPoint {
    EvalSummary proposed;
    EvalSummary offline;
    /// Largest offline grid bound seen over the trials.
    double offline_bound = 0.0;
    /// Mean accumulated bound of the per-trial plans.
    double proposed_bound = 0.0;
};

/// Per trial: realized channel revealed to the planner, which then plans at `delta`;
/// the offline solver additionally knows the prediction errors and access states.
PredictionErrorPoint evaluate_prediction_error(const Scenario& s, std::size_t trials, std::uint64_t seed, double delta,
                                               double delta_ref);

struct ExperimentPreset {
    std::string name;
    std::vector<double> sweep;
    std::vector<double> deltas{1.0, 0.1};
    double alpha = 1e-4;
    std::optional<double> gamma;
    std::size_t trials = 10000;
    std::uint64_t seed = 1;
    std::optional<RunConfig> custom;
};

/// fig5-energy-constrained | fig6-power-constrained | fig7-infinite | fig7-convergence |
/// fig8-prediction-error | custom (needs a config).
ExperimentPreset make_preset(const std::string& name);

/// Writes <out>/<preset>.csv (plus traces or gap tables) and <out>/<preset>.meta.json.
/// Returns the written paths.
std::vector<std::filesystem::path> run_experiment(const ExperimentPreset& preset, const std::filesystem::path& out,
                                                  std::ostream* log = nullptr);

}  // namespace ehpa
