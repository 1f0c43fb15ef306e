#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ehpa/models.hpp"
#include "ehpa/policy.hpp"
#include "ehpa/pwl.hpp"

namespace ehpa {

/// min(p_max, b / T_c) whenever access is granted.
class GreedyPolicy final : public Policy {
public:
    explicit GreedyPolicy(const Scenario& s) : s_(&s) {}
    std::string name() const override { return "greedy"; }
    double power(const Observation& obs) const override;

private:
    const Scenario* s_;
};

/// min(mean harvest / T_c, p_max, b / T_c) whenever access is granted.
class BalancedPolicy final : public Policy {
public:
    explicit BalancedPolicy(const Scenario& s);
    std::string name() const override { return "balanced"; }
    double power(const Observation& obs) const override;
    double target() const { return target_; }

private:
    const Scenario* s_;
    double target_;
};

double greedy_policy(const Observation& obs, const Scenario& s);
double balanced_policy(const Observation& obs, const Scenario& s);

/// How the successor battery level is mapped back onto the grid.
enum class TransitionRounding {
    nearest,      // snap to the closest grid level
    floor,        // snap down
    interpolate,  // linear interpolation between neighbouring levels
};

/// Where each channel bin's mass is placed.
enum class ChannelAtoms {
    lower_edge,  // atom i delta carries the mass of [i delta, (i+1) delta)
    centered,    // atom i delta carries the mass of the cell of h values nearest to it
    bin_mean,    // bins [i delta, (i+1) delta), atom at the conditional mean of h in the bin
};

struct DiscreteMdpOptions {
    double delta = 1.0;
    ChannelAtoms channel_atoms = ChannelAtoms::bin_mean;
    TransitionRounding rounding = TransitionRounding::nearest;
    double alpha = 1e-4;
    std::size_t max_iters = 5000;
    /// Upper limit on states x actions x channel atoms x error atoms per stage.
    double budget = 2e9;
};

/// Quantized channel law on the lattice {0, delta, 2 delta, ...}.
struct ChannelBins {
    std::vector<double> atoms;
    std::vector<double> probs;
    ChannelAtoms placement = ChannelAtoms::lower_edge;
    double delta = 1.0;
    /// Atom index used for an observed gain h.
    std::size_t lookup(double h) const;
};

ChannelBins quantize_channel(const ChannelLaw& law, double delta, ChannelAtoms placement);

/// Value and greedy action arrays of the discretized MDP.
class DiscreteMdpTable {
public:
    std::size_t horizon() const { return values_.size(); }  // 1 for infinite tables
    bool finite() const { return finite_; }
    const BatteryGrid& grid() const { return grid_; }
    double delta() const { return grid_.delta(); }
    /// V for slot k (1-based; ignored for infinite tables).
    const PwlValue& value(std::size_t k) const { return values_[finite_ ? k - 1 : 0]; }
    const ChannelBins& bins(std::size_t k) const { return bins_[bin_index(k)]; }
    /// Power for (k, battery index, channel atom index) when access is granted.
    double action(std::size_t k, std::size_t battery, std::size_t channel) const;
    std::size_t iterations() const { return iterations_; }
    TransitionRounding rounding() const { return rounding_; }

    /// Same tabular layout as the planner tables, one block per slot.
    void dump(std::ostream& out) const;

private:
    friend DiscreteMdpTable discrete_mdp_plan(const Scenario& s, const DiscreteMdpOptions& opt);
    std::size_t bin_index(std::size_t k) const { return bins_.size() == 1 ? 0 : (finite_ ? k - 1 : 0); }

    BatteryGrid grid_{1.0, 1.0};
    bool finite_ = true;
    std::vector<ChannelBins> bins_;
    std::vector<PwlValue> values_;
    std::vector<std::vector<std::uint32_t>> actions_;  // per slot: battery-major, channel-minor action index
    std::size_t iterations_ = 0;
    TransitionRounding rounding_ = TransitionRounding::nearest;
};

DiscreteMdpTable discrete_mdp_plan(const Scenario& s, const DiscreteMdpOptions& opt);

class DiscreteMdpPolicy final : public Policy {
public:
    DiscreteMdpPolicy(const DiscreteMdpTable& table, const Scenario& s);
    std::string name() const override;
    double power(const Observation& obs) const override;

private:
    const DiscreteMdpTable* table_;
    const Scenario* s_;
};

struct OfflineSolution {
    std::vector<double> powers;
    double payoff = 0.0;
    /// Accumulated grid-approximation bound of the fine-grid value function.
    double error_bound = 0.0;
};

/// Best power sequence with the whole realization (h_k, A_k, net harvest) known in advance,
/// via fine-grid dynamic programming with per-stage closed-form maximization.
OfflineSolution offline_noncausal_optimum(const Scenario& s, const Realization& r, double delta_ref);

/// Replays a fixed power sequence (for evaluating an offline solution like any policy).
class ScheduledPolicy final : public Policy {
public:
    ScheduledPolicy(std::vector<double> powers, std::string label) : powers_(std::move(powers)), label_(std::move(label)) {}
    std::string name() const override { return label_; }
    double power(const Observation& obs) const override { return powers_.at(obs.k - 1); }

private:
    std::vector<double> powers_;
    std::string label_;
};

}  // namespace ehpa
