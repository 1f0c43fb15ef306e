#include "ehpa/models.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "ehpa/errors.hpp"
#include "ehpa/random.hpp"
#include "ehpa/text.hpp"

namespace ehpa {

using text::format_double;

namespace {

void sort_atoms(std::vector<double>& atoms, std::vector<double>& probs, const char* what) {
    if (atoms.empty() || atoms.size() != probs.size()) {
        throw ContractError(std::string(what) + ": atoms and probabilities must be non-empty and of equal length");
    }
    std::vector<std::size_t> order(atoms.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return atoms[a] < atoms[b]; });
    std::vector<double> a2, p2;
    double total = 0.0;
    for (auto i : order) {
        if (!std::isfinite(atoms[i])) throw ContractError(std::string(what) + ": non-finite atom");
        if (!(probs[i] >= 0.0)) throw ContractError(std::string(what) + ": negative probability");
        a2.push_back(atoms[i]);
        p2.push_back(probs[i]);
        total += probs[i];
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ContractError(std::string(what) + ": probabilities sum to " + format_double(total));
    }
    atoms = std::move(a2);
    probs = std::move(p2);
}

double sample_atoms(std::span<const double> atoms, std::span<const double> probs, double u) {
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < atoms.size(); ++i) {
        cum += probs[i];
        if (u < cum) return atoms[i];
    }
    return atoms.back();
}

}  // namespace

// ---------------------------------------------------------------- ChannelLaw

ChannelLaw::ChannelLaw(Kind kind, double param, std::vector<double> atoms, std::vector<double> probs)
    : kind_(kind), param_(param), atoms_(std::move(atoms)), probs_(std::move(probs)) {
    if (is_continuous()) {
        if (!(param_ > 0.0) || !std::isfinite(param_)) throw ContractError("channel law parameter must be positive");
        const double top = upper_quantile(1e-12);
        const double mass = quad::integrate([this](double h) { return density(h); }, 0.0, top) + 1e-12;
        if (std::abs(mass - 1.0) > 1e-8) {
            throw NumericError("channel density integrates to " + format_double(mass));
        }
    }
}

ChannelLaw ChannelLaw::rayleigh(double sigma) { return ChannelLaw(Kind::rayleigh, sigma, {}, {}); }

ChannelLaw ChannelLaw::exponential(double mean) { return ChannelLaw(Kind::exponential, mean, {}, {}); }

ChannelLaw ChannelLaw::discrete(std::vector<double> atoms, std::vector<double> probs) {
    sort_atoms(atoms, probs, "discrete channel law");
    if (atoms.front() < 0.0) throw ContractError("discrete channel law: negative channel gain");
    return ChannelLaw(Kind::discrete, 0.0, std::move(atoms), std::move(probs));
}

ChannelLaw ChannelLaw::degenerate(double h0) {
    if (!(h0 >= 0.0) || !std::isfinite(h0)) throw ContractError("degenerate channel gain must be >= 0");
    return ChannelLaw(Kind::degenerate, h0, {h0}, {1.0});
}

double ChannelLaw::density(double h) const {
    if (h < 0.0) return 0.0;
    switch (kind_) {
        case Kind::rayleigh: {
            const double s2 = param_ * param_;
            return h / s2 * std::exp(-h * h / (2.0 * s2));
        }
        case Kind::exponential:
            return std::exp(-h / param_) / param_;
        default:
            throw ContractError("density() is undefined for a discrete channel law");
    }
}

double ChannelLaw::cdf(double h) const {
    if (h < 0.0) return 0.0;
    switch (kind_) {
        case Kind::rayleigh:
            return -std::expm1(-h * h / (2.0 * param_ * param_));
        case Kind::exponential:
            return -std::expm1(-h / param_);
        default: {
            double cum = 0.0;
            for (std::size_t i = 0; i < atoms_.size() && atoms_[i] <= h; ++i) cum += probs_[i];
            return std::min(cum, 1.0);
        }
    }
}

double ChannelLaw::quantile(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
    switch (kind_) {
        case Kind::rayleigh:
            return param_ * std::sqrt(-2.0 * std::log1p(-u));
        case Kind::exponential:
            return -param_ * std::log1p(-u);
        default: {
            double cum = 0.0;
            for (std::size_t i = 0; i < atoms_.size(); ++i) {
                cum += probs_[i];
                if (cum >= u) return atoms_[i];
            }
            return atoms_.back();
        }
    }
}

double ChannelLaw::upper_quantile(double tail) const {
    switch (kind_) {
        case Kind::rayleigh:
            return param_ * std::sqrt(-2.0 * std::log(tail));
        case Kind::exponential:
            return -param_ * std::log(tail);
        default:
            return quantile(1.0 - tail);
    }
}

double ChannelLaw::mean() const {
    switch (kind_) {
        case Kind::rayleigh:
            return param_ * std::sqrt(std::numbers::pi / 2.0);
        case Kind::exponential:
            return param_;
        default:
            return std::inner_product(atoms_.begin(), atoms_.end(), probs_.begin(), 0.0);
    }
}

double ChannelLaw::variance() const {
    switch (kind_) {
        case Kind::rayleigh:
            return (4.0 - std::numbers::pi) / 2.0 * param_ * param_;
        case Kind::exponential:
            return param_ * param_;
        default: {
            const double m = mean();
            double v = 0.0;
            for (std::size_t i = 0; i < atoms_.size(); ++i) v += probs_[i] * (atoms_[i] - m) * (atoms_[i] - m);
            return v;
        }
    }
}

double ChannelLaw::sample(double u) const {
    if (is_continuous()) return quantile(u);
    return sample_atoms(atoms_, probs_, u);
}

std::string ChannelLaw::describe() const {
    switch (kind_) {
        case Kind::rayleigh:
            return "rayleigh(sigma=" + format_double(param_) + ")";
        case Kind::exponential:
            return "exponential(mean=" + format_double(param_) + ")";
        case Kind::degenerate:
            return "degenerate(h0=" + format_double(param_) + ")";
        case Kind::discrete: {
            std::string out = "discrete(";
            for (std::size_t i = 0; i < atoms_.size(); ++i) {
                if (i) out += ';';
                out += format_double(atoms_[i]) + ':' + format_double(probs_[i]);
            }
            return out + ")";
        }
    }
    return {};
}

// ---------------------------------------------------------------- AccessChain

AccessChain::AccessChain(double q, double q_tilde) : q_(q), q_tilde_(q_tilde) {
    if (!(q >= 0.0 && q <= 1.0) || !(q_tilde >= 0.0 && q_tilde <= 1.0)) {
        throw ContractError("access transition probabilities must lie in [0, 1]");
    }
}

std::array<double, 2> AccessChain::step_distribution(Access from) const {
    const double to_denied = from == Access::granted ? q_ : q_tilde_;
    return {to_denied, 1.0 - to_denied};
}

std::optional<double> AccessChain::stationary_granted() const {
    const double denom = q_ + (1.0 - q_tilde_);
    if (denom <= 0.0) return std::nullopt;
    return (1.0 - q_tilde_) / denom;
}

std::array<double, 2> access_step_distribution(const AccessChain& chain, Access from) {
    return chain.step_distribution(from);
}

// ---------------------------------------------------------------- ErrorLaw

ErrorLaw::ErrorLaw(Kind kind, std::vector<double> atoms, std::vector<double> probs, double v, double step)
    : kind_(kind), atoms_(std::move(atoms)), probs_(std::move(probs)), v_(v), step_(step) {}

ErrorLaw ErrorLaw::none() { return ErrorLaw(Kind::none, {0.0}, {1.0}, 0.0, 0.0); }

ErrorLaw ErrorLaw::uniform(double v, double step) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ContractError("prediction error range v must be >= 0");
    if (!(step > 0.0)) throw ContractError("prediction error step must be positive");
    const double ratio = 2.0 * v / step;
    const double n = std::round(ratio);
    if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
        throw ContractError("prediction error range 2v is not a multiple of the step");
    }
    const auto count = static_cast<std::size_t>(n) + 1;
    std::vector<double> atoms(count), probs(count, 1.0 / static_cast<double>(count));
    for (std::size_t i = 0; i < count; ++i) atoms[i] = -v + static_cast<double>(i) * step;
    atoms.back() = v;
    if (count % 2 == 1) atoms[count / 2] = 0.0;
    return ErrorLaw(Kind::uniform, std::move(atoms), std::move(probs), v, step);
}

ErrorLaw ErrorLaw::discrete(std::vector<double> atoms, std::vector<double> probs) {
    sort_atoms(atoms, probs, "prediction error law");
    return ErrorLaw(Kind::discrete, std::move(atoms), std::move(probs), 0.0, 0.0);
}

double ErrorLaw::mean() const { return std::inner_product(atoms_.begin(), atoms_.end(), probs_.begin(), 0.0); }

double ErrorLaw::sample(double u) const { return sample_atoms(atoms_, probs_, u); }

std::string ErrorLaw::describe() const {
    switch (kind_) {
        case Kind::none:
            return "none";
        case Kind::uniform:
            return "uniform(v=" + format_double(v_) + ",step=" + format_double(step_) + ")";
        case Kind::discrete: {
            std::string out = "discrete(";
            for (std::size_t i = 0; i < atoms_.size(); ++i) {
                if (i) out += ';';
                out += format_double(atoms_[i]) + ':' + format_double(probs_[i]);
            }
            return out + ")";
        }
    }
    return {};
}

// ---------------------------------------------------------------- HarvestSchedule

HarvestSchedule::HarvestSchedule(std::vector<double> predictions, ErrorLaw error)
    : predictions_(std::move(predictions)), error_(std::move(error)) {
    if (predictions_.empty()) throw ContractError("harvest schedule needs at least one prediction");
    for (std::size_t k = 0; k < predictions_.size(); ++k) {
        const double e = predictions_[k];
        if (!(e >= 0.0) || !std::isfinite(e)) throw ContractError("harvest prediction must be >= 0");
        if (e + error_.min_atom() < -1e-12) {
            throw ContractError("prediction error law allows negative net harvest in slot " + std::to_string(k + 1) +
                                " (e = " + format_double(e) + ", min error = " + format_double(error_.min_atom()) + ")");
        }
    }
}

double HarvestSchedule::mean_harvest() const {
    const double m = std::accumulate(predictions_.begin(), predictions_.end(), 0.0) /
                     static_cast<double>(predictions_.size());
    return m + error_.mean();
}

std::vector<double> truncated_gaussian_predictions(double mean, double variance, std::size_t count,
                                                   std::uint64_t seed) {
    if (!(variance >= 0.0)) throw ContractError("harvest variance must be >= 0");
    if (variance == 0.0 && !(mean > 0.0)) throw ContractError("degenerate truncated Gaussian with non-positive mean");
    Rng rng(seed);
    const double sd = std::sqrt(variance);
    std::vector<double> out;
    out.reserve(count);
    while (out.size() < count) {
        const double x = mean + sd * rng.normal();
        if (x > 0.0) out.push_back(x);
    }
    return out;
}

// ---------------------------------------------------------------- PayoffModel

PayoffModel PayoffModel::log_rate() {
    PayoffModel m;
    m.name_ = "log_rate";
    m.log_rate_ = true;
    return m;
}

PayoffModel PayoffModel::linear() {
    auto value = [](double p, double h) { return p * h; };
    auto slope = [](double, double h) { return h; };
    return generic("linear", value, slope, slope);
}

PayoffModel PayoffModel::generic(std::string name, Fn value, Fn right_derivative, Fn left_derivative) {
    if (!value || !right_derivative || !left_derivative) throw ContractError("generic payoff needs all three functions");
    Rng rng(0x5eed);
    for (int trial = 0; trial < 256; ++trial) {
        const double h = 5.0 * rng.uniform();
        double p[3] = {10.0 * rng.uniform(), 10.0 * rng.uniform(), 10.0 * rng.uniform()};
        std::sort(p, p + 3);
        if (p[1] - p[0] < 1e-6 || p[2] - p[1] < 1e-6) continue;
        const double r0 = value(p[0], h), r1 = value(p[1], h), r2 = value(p[2], h);
        const double scale = 1e-9 * (1.0 + std::abs(r0) + std::abs(r2));
        if (r1 < r0 - scale || r2 < r1 - scale) throw ContractError("payoff '" + name + "' is not non-decreasing in p");
        const double s01 = (r1 - r0) / (p[1] - p[0]);
        const double s12 = (r2 - r1) / (p[2] - p[1]);
        if (s12 > s01 + 1e-9 * (1.0 + std::abs(s01))) throw ContractError("payoff '" + name + "' is not concave in p");
    }
    PayoffModel m;
    m.name_ = std::move(name);
    m.value_ = std::move(value);
    m.right_ = std::move(right_derivative);
    m.left_ = std::move(left_derivative);
    return m;
}

// ---------------------------------------------------------------- Scenario

double Scenario::initial_granted_probability() const {
    if (initial_access) return *initial_access == Access::granted ? 1.0 : 0.0;
    if (auto pi = access.stationary_granted()) return *pi;
    throw ContractError("access chain has no unique stationary law; set a fixed initial access state");
}

void Scenario::validate() const {
    if (channels.empty()) throw ContractError("scenario needs a channel law");
    if (!(p_max > 0.0)) throw ContractError("p_max must be positive");
    if (!(b_max > 0.0)) throw ContractError("b_max must be positive");
    if (!(b0 >= 0.0 && b0 <= b_max)) throw ContractError("initial battery b0 must lie in [0, b_max]");
    if (!(slot_length > 0.0)) throw ContractError("slot length T_c must be positive");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ContractError("discount gamma must lie in [0, 1]");
    if (finite()) {
        const auto K = *horizon;
        if (K == 0) throw ContractError("finite horizon must be at least one slot");
        if (channels.size() != 1 && channels.size() != K) throw ContractError("need one channel law or one per slot");
        const auto n = harvest.predictions().size();
        if (n != 1 && n != K) throw ContractError("need one harvest prediction or one per slot");
    } else {
        if (!(gamma < 1.0)) throw ContractError("infinite horizon requires gamma < 1");
        if (channels.size() != 1) throw ContractError("infinite horizon needs a single stationary channel law");
        if (harvest.predictions().size() != 1) throw ContractError("infinite horizon needs a constant harvest prediction");
    }
    (void)initial_granted_probability();
}

std::string Scenario::describe() const {
    std::ostringstream out;
    out << "horizon=" << (finite() ? std::to_string(*horizon) : std::string("infinite")) << '\n';
    out << "gamma=" << format_double(gamma) << '\n';
    out << "p_max=" << format_double(p_max) << '\n';
    out << "b_max=" << format_double(b_max) << '\n';
    out << "b0=" << format_double(b0) << '\n';
    out << "slot_length=" << format_double(slot_length) << '\n';
    out << "access.q=" << format_double(access.q()) << '\n';
    out << "access.q_tilde=" << format_double(access.q_tilde()) << '\n';
    out << "access.initial="
        << (initial_access ? std::to_string(index_of(*initial_access)) : std::string("stationary")) << '\n';
    out << "payoff=" << payoff.name() << '\n';
    out << "error=" << harvest.error().describe() << '\n';
    out << "harvest=";
    const auto e = harvest.predictions();
    for (std::size_t k = 0; k < e.size(); ++k) out << (k ? "," : "") << format_double(e[k]);
    out << '\n';
    out << "channel=";
    for (std::size_t k = 0; k < channels.size(); ++k) out << (k ? "," : "") << channels[k].describe();
    out << '\n';
    return out.str();
}

SlotModel slot_model(const Scenario& s, std::size_t slot) {
    return SlotModel{&s.channel(slot), &s.harvest.error(), &s.payoff, s.access,  s.prediction(slot),
                     s.p_max,          s.b_max,            s.slot_length, s.gamma};
}

Realization sample_trajectory(const Scenario& s, std::uint64_t seed, std::size_t length) {
    if (length == 0) throw ContractError("trajectory length must be at least one slot");
    Rng rng(seed);
    Realization r;
    r.h.resize(length);
    r.access.resize(length);
    r.error.resize(length);
    const double p_granted = s.initial_granted_probability();
    for (std::size_t k = 0; k < length; ++k) {
        const double ua = rng.uniform();
        const double uh = rng.uniform();
        const double ue = rng.uniform();
        if (k == 0) {
            r.access[k] = ua < p_granted ? Access::granted : Access::denied;
        } else {
            const auto dist = s.access.step_distribution(r.access[k - 1]);
            r.access[k] = ua < dist[0] ? Access::denied : Access::granted;
        }
        r.h[k] = s.channel(s.channels.size() == 1 ? 0 : k).sample(uh);
        r.error[k] = s.harvest.error().sample(ue);
    }
    return r;
}

}  // namespace ehpa
