#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ehpa/pwl.hpp"
#include "ehpa/quadrature.hpp"

namespace ehpa {

/// Tail mass discarded by continuous-law channel quadrature.
inline constexpr double kChannelTailMass = 1e-9;

/// Distribution of the channel power gain h >= 0 in one slot.
class ChannelLaw {
public:
    enum class Kind { rayleigh, exponential, discrete, degenerate };

    static ChannelLaw rayleigh(double sigma);
    static ChannelLaw exponential(double mean);
    static ChannelLaw discrete(std::vector<double> atoms, std::vector<double> probs);
    static ChannelLaw degenerate(double h0);

    Kind kind() const { return kind_; }
    bool is_continuous() const { return kind_ == Kind::rayleigh || kind_ == Kind::exponential; }
    double parameter() const { return param_; }

    double density(double h) const;
    double cdf(double h) const;
    double quantile(double u) const;
    /// Quantile at 1 - tail, evaluated without cancellation.
    double upper_quantile(double tail) const;
    double mean() const;
    double variance() const;
    /// Inverse-transform sample from a uniform u in [0, 1).
    double sample(double u) const;

    /// Support points and weights (discrete/degenerate kinds; empty otherwise).
    std::span<const double> atoms() const { return atoms_; }
    std::span<const double> probs() const { return probs_; }

    /// Canonical one-line description, used for fingerprints and metadata.
    std::string describe() const;

private:
    ChannelLaw(Kind kind, double param, std::vector<double> atoms, std::vector<double> probs);
    Kind kind_;
    double param_;
    std::vector<double> atoms_;
    std::vector<double> probs_;
};

template <class F>
double detail_checked_eval(F& f, double h) {
    const double y = f(h);
    if (!std::isfinite(y)) throw NumericError("non-finite integrand at h = " + text::format_double(h));
    return y;
}

/// E_h[f(h)] under `law`. For continuous laws the integrand may have kinks at
/// `breakpoints`; the range [0, quantile(1 - 1e-9)] is split there and each
/// piece integrated adaptively, the truncated tail contributing
/// tail_mass * f(h_tail). Discrete laws use the exact weighted sum.
template <class F>
double expected_over_channel(F&& f, const ChannelLaw& law, std::span<const double> breakpoints,
                             const quad::Options& opt = {}) {
    if (!law.is_continuous()) {
        double sum = 0.0;
        const auto atoms = law.atoms();
        const auto probs = law.probs();
        for (std::size_t i = 0; i < atoms.size(); ++i) sum += probs[i] * detail_checked_eval(f, atoms[i]);
        return sum;
    }
    const double top = law.upper_quantile(kChannelTailMass);
    auto weighted = [&](double h) { return f(h) * law.density(h); };
    double sum = 0.0;
    double left = 0.0;
    auto integrate_to = [&](double right) {
        if (right > left) {
            sum += quad::integrate(weighted, left, right, opt);
            left = right;
        }
    };
    // breakpoints are expected sorted; unsorted input is handled by a copy.
    if (std::is_sorted(breakpoints.begin(), breakpoints.end())) {
        for (double h : breakpoints) {
            if (h > left && h < top) integrate_to(h);
        }
    } else {
        std::vector<double> sorted(breakpoints.begin(), breakpoints.end());
        std::sort(sorted.begin(), sorted.end());
        for (double h : sorted) {
            if (h > left && h < top) integrate_to(h);
        }
    }
    integrate_to(top);
    return sum + (1.0 - law.cdf(top)) * detail_checked_eval(f, top);
}

/// Two-state Markov chain of channel access. q = Pr(A'=0 | A=1),
/// q_tilde = Pr(A'=0 | A=0).
class AccessChain {
public:
    AccessChain(double q, double q_tilde);

    double q() const { return q_; }
    double q_tilde() const { return q_tilde_; }

    /// {Pr(A'=0 | from), Pr(A'=1 | from)}.
    std::array<double, 2> step_distribution(Access from) const;
    /// Stationary Pr(A = 1); empty when the chain has no unique stationary law.
    std::optional<double> stationary_granted() const;

private:
    double q_;
    double q_tilde_;
};

std::array<double, 2> access_step_distribution(const AccessChain& chain, Access from);

/// Law of the harvest prediction error epsilon (finite support).
class ErrorLaw {
public:
    enum class Kind { none, uniform, discrete };

    static ErrorLaw none();
    /// Discrete uniform on {-v, -v + step, ..., v}; 2v/step must be an integer.
    static ErrorLaw uniform(double v, double step);
    static ErrorLaw discrete(std::vector<double> atoms, std::vector<double> probs);

    Kind kind() const { return kind_; }
    std::span<const double> atoms() const { return atoms_; }
    std::span<const double> probs() const { return probs_; }
    double min_atom() const { return atoms_.front(); }
    double mean() const;
    double sample(double u) const;
    std::string describe() const;

private:
    ErrorLaw(Kind kind, std::vector<double> atoms, std::vector<double> probs, double v, double step);
    Kind kind_;
    std::vector<double> atoms_;  // ascending
    std::vector<double> probs_;
    double v_ = 0.0;
    double step_ = 0.0;
};

/// Predicted harvest e_k per slot plus the prediction-error law.
class HarvestSchedule {
public:
    /// `predictions` has one entry per slot, or a single entry used for every slot.
    HarvestSchedule(std::vector<double> predictions, ErrorLaw error);

    double prediction(std::size_t slot) const {
        return predictions_.size() == 1 ? predictions_.front() : predictions_.at(slot);
    }
    std::span<const double> predictions() const { return predictions_; }
    const ErrorLaw& error() const { return error_; }
    /// Mean of the predictions plus E[epsilon].
    double mean_harvest() const;

private:
    std::vector<double> predictions_;
    ErrorLaw error_;
};

/// Positive truncated Gaussian draws (rejection of values <= 0), reproducible from `seed`.
std::vector<double> truncated_gaussian_predictions(double mean, double variance, std::size_t count,
                                                   std::uint64_t seed);

/// Per-slot payoff r(p, h): non-decreasing and concave in p.
class PayoffModel {
public:
    using Fn = std::function<double(double, double)>;

    /// r(p, h) = log(1 + p h), in nats.
    static PayoffModel log_rate();
    /// r(p, h) = p h.
    static PayoffModel linear();
    /// Generic concave payoff with one-sided p-derivatives. Spot-checks monotonicity
    /// and concavity on random triples; throws ContractError on violation.
    static PayoffModel generic(std::string name, Fn value, Fn right_derivative, Fn left_derivative);

    bool is_log_rate() const { return log_rate_; }
    const std::string& name() const { return name_; }
    double value(double p, double h) const { return log_rate_ ? std::log1p(p * h) : value_(p, h); }
    double right_derivative(double p, double h) const { return log_rate_ ? h / (1.0 + p * h) : right_(p, h); }
    double left_derivative(double p, double h) const { return log_rate_ ? h / (1.0 + p * h) : left_(p, h); }

private:
    PayoffModel() = default;
    std::string name_;
    bool log_rate_ = false;
    Fn value_, right_, left_;
};

/// Complete stochastic description of one planning / evaluation problem.
struct Scenario {
    std::vector<ChannelLaw> channels;  // one per slot (finite) or one shared law
    AccessChain access{0.1, 0.1};
    std::optional<Access> initial_access;  // empty: draw A_1 from the stationary law
    HarvestSchedule harvest{{3.0}, ErrorLaw::none()};
    PayoffModel payoff = PayoffModel::log_rate();
    double p_max = 6.0;
    double b_max = 15.0;
    double b0 = 2.0;
    double slot_length = 1.0;
    double gamma = 1.0;
    std::optional<std::size_t> horizon;  // empty: infinite horizon

    bool finite() const { return horizon.has_value(); }
    const ChannelLaw& channel(std::size_t slot) const {
        return channels.size() == 1 ? channels.front() : channels.at(slot);
    }
    double prediction(std::size_t slot) const { return harvest.prediction(slot); }
    /// Pr(A_1 = 1); throws ContractError if neither a fixed state nor a unique stationary law exists.
    double initial_granted_probability() const;

    /// Throws ContractError on any violated invariant.
    void validate() const;
    /// Canonical key=value serialisation of every parameter.
    std::string describe() const;
};

/// Scenario parameters that a single backup at slot k needs.
struct SlotModel {
    const ChannelLaw* channel;
    const ErrorLaw* error;
    const PayoffModel* payoff;
    AccessChain access;
    double prediction;
    double p_max;
    double b_max;
    double slot_length;
    double gamma;
};

SlotModel slot_model(const Scenario& s, std::size_t slot);

/// One sampled realization of the exogenous processes.
struct Realization {
    std::vector<double> h;
    std::vector<Access> access;
    std::vector<double> error;
};

/// Deterministic in `seed`: h_k i.i.d. per slot law, A_k along the chain, epsilon_k i.i.d.
Realization sample_trajectory(const Scenario& s, std::uint64_t seed, std::size_t length);

}  // namespace ehpa
