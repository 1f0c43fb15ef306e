#include "ehpa/baselines.hpp"

#include <cmath>
#include <ostream>

#include "ehpa/bellman.hpp"
#include "ehpa/errors.hpp"
#include "ehpa/staircase.hpp"
#include "ehpa/text.hpp"

namespace ehpa {

using text::format_double;

double greedy_policy(const Observation& obs, const Scenario& s) {
    if (obs.access == Access::denied) return 0.0;
    return std::min(s.p_max, obs.b / s.slot_length);
}

double GreedyPolicy::power(const Observation& obs) const { return greedy_policy(obs, *s_); }

BalancedPolicy::BalancedPolicy(const Scenario& s) : s_(&s), target_(s.harvest.mean_harvest() / s.slot_length) {}

double balanced_policy(const Observation& obs, const Scenario& s) {
    if (obs.access == Access::denied) return 0.0;
    const double target = s.harvest.mean_harvest() / s.slot_length;
    return std::min({target, s.p_max, obs.b / s.slot_length});
}

double BalancedPolicy::power(const Observation& obs) const {
    if (obs.access == Access::denied) return 0.0;
    return std::min({target_, s_->p_max, obs.b / s_->slot_length});
}

// ---------------------------------------------------------------- discrete MDP

ChannelBins quantize_channel(const ChannelLaw& law, double delta, ChannelAtoms placement) {
    if (!(delta > 0.0)) throw ContractError("channel quantization step must be positive");
    ChannelBins bins;
    if (!law.is_continuous()) {
        bins.atoms.assign(law.atoms().begin(), law.atoms().end());
        bins.probs.assign(law.probs().begin(), law.probs().end());
        return bins;
    }
    bins.placement = placement;
    bins.delta = delta;
    const double shift = placement == ChannelAtoms::centered ? 0.5 * delta : delta;
    const double top = law.upper_quantile(1e-6);
    const double far = law.upper_quantile(1e-15);
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(top / delta)));
    double previous = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = static_cast<double>(i) * delta;
        const double c = i + 1 == n ? 1.0 : law.cdf(lo + shift);
        const double mass = c - previous;
        double atom = lo;
        if (placement == ChannelAtoms::bin_mean && mass > 0.0) {
            const double hi = i + 1 == n ? std::max(far, lo + delta) : lo + delta;
            atom = quad::integrate([&](double h) { return h * law.density(h); }, lo, hi) / mass;
            atom = std::clamp(atom, lo, hi);
        }
        bins.atoms.push_back(atom);
        bins.probs.push_back(mass);
        previous = c;
    }
    return bins;
}

std::size_t ChannelBins::lookup(double h) const {
    if (placement != ChannelAtoms::lower_edge) {
        const double offset = placement == ChannelAtoms::centered ? 0.5 : 0.0;
        const auto i = static_cast<std::size_t>(std::max(0.0, std::floor(h / delta + offset)));
        return std::min(i, atoms.size() - 1);
    }
    const auto it = std::upper_bound(atoms.begin(), atoms.end(), h);
    return it == atoms.begin() ? 0 : static_cast<std::size_t>(it - atoms.begin()) - 1;
}

double DiscreteMdpTable::action(std::size_t k, std::size_t battery, std::size_t channel) const {
    const auto& acts = actions_[finite_ ? k - 1 : 0];
    const std::size_t nh = bins(k).atoms.size();
    return static_cast<double>(acts[battery * nh + channel]) * grid_.delta();
}

void DiscreteMdpTable::dump(std::ostream& out) const {
    out << "# discrete MDP table\n# delta=" << format_double(delta()) << "\n# kind=" << (finite_ ? "finite" : "infinite")
        << '\n';
    for (std::size_t k = 0; k < values_.size(); ++k) {
        out << "\n# slot=" << (finite_ ? std::to_string(k + 1) : std::string("all")) << '\n';
        pwl::write_table(out, values_[k]);
    }
}

namespace {

struct DmdpStage {
    PwlValue value;
    std::vector<std::uint32_t> actions;
};

DmdpStage dmdp_backup(const PwlValue& next, const SlotModel& m, const ChannelBins& bins,
                      const DiscreteMdpOptions& opt) {
    const auto& grid = next.grid();
    const double delta = grid.delta();
    const std::size_t nb = grid.size();
    const std::size_t nh = bins.atoms.size();
    const auto eps = m.error->atoms();
    const auto eps_p = m.error->probs();

    auto successor = [&](double b, Access a) {
        b = std::clamp(b, 0.0, m.b_max);
        switch (opt.rounding) {
            case TransitionRounding::nearest:
                return next.samples(a)[grid.nearest_index(b)];
            case TransitionRounding::floor:
                return next.samples(a)[grid.floor_index(b)];
            case TransitionRounding::interpolate:
                break;
        }
        return next(b, a);
    };
    auto future = [&](double b, double p, Access current) {
        const auto dist = m.access.step_distribution(current);
        double total = 0.0;
        for (Access a : {Access::denied, Access::granted}) {
            if (dist[index_of(a)] == 0.0) continue;
            double inner = 0.0;
            for (std::size_t j = 0; j < eps.size(); ++j) {
                inner += eps_p[j] * successor(std::min(m.b_max, b + m.prediction + eps[j] - p * m.slot_length), a);
            }
            total += dist[index_of(a)] * inner;
        }
        return m.gamma * total;
    };

    std::vector<double> v0(nb), v1(nb);
    std::vector<std::uint32_t> actions(nb * nh, 0);
    const auto count = static_cast<long>(nb);
#pragma omp parallel for schedule(dynamic)
    for (long li = 0; li < count; ++li) {
        const auto i = static_cast<std::size_t>(li);
        const double b = grid.point(i);
        const double cap = std::min(m.p_max, b / m.slot_length);
        const auto n_act = static_cast<std::size_t>(std::floor(cap / delta + 1e-9)) + 1;
        std::vector<double> powers(n_act), fut(n_act);
        for (std::size_t j = 0; j < n_act; ++j) {
            powers[j] = std::min(static_cast<double>(j) * delta, cap);
            fut[j] = future(b, powers[j], Access::granted);
        }
        v0[i] = future(b, 0.0, Access::denied);
        double expect = 0.0;
        for (std::size_t c = 0; c < nh; ++c) {
            const double h = bins.atoms[c];
            std::size_t best = 0;
            double best_val = m.payoff->value(0.0, h) + fut[0];
            for (std::size_t j = 1; j < n_act; ++j) {
                const double val = m.payoff->value(powers[j], h) + fut[j];
                if (val > best_val) {
                    best_val = val;
                    best = j;
                }
            }
            actions[i * nh + c] = static_cast<std::uint32_t>(best);
            expect += bins.probs[c] * best_val;
        }
        v1[i] = expect;
    }
    return {PwlValue(grid, std::move(v0), std::move(v1)), std::move(actions)};
}

}  // namespace

DiscreteMdpTable discrete_mdp_plan(const Scenario& s, const DiscreteMdpOptions& opt) {
    s.validate();
    DiscreteMdpTable t;
    t.grid_ = BatteryGrid(s.b_max, opt.delta);
    t.finite_ = s.finite();
    t.rounding_ = opt.rounding;
    const std::size_t n_laws = s.channels.size();
    for (std::size_t i = 0; i < n_laws; ++i) t.bins_.push_back(quantize_channel(s.channels[i], opt.delta, opt.channel_atoms));

    std::size_t max_bins = 0;
    for (const auto& b : t.bins_) max_bins = std::max(max_bins, b.atoms.size());
    const double actions = std::floor(s.p_max / opt.delta) + 1.0;
    const double work = static_cast<double>(t.grid_.size()) * 2.0 * actions * static_cast<double>(max_bins) *
                        static_cast<double>(s.harvest.error().atoms().size());
    if (work > opt.budget) {
        throw ContractError("discrete MDP of size " + format_double(work) + " exceeds the budget " +
                            format_double(opt.budget));
    }

    PwlValue next = PwlValue::zero(t.grid_);
    if (t.finite_) {
        const std::size_t K = *s.horizon;
        std::vector<DmdpStage> stages;
        for (std::size_t k = K; k >= 1; --k) {
            auto stage = dmdp_backup(next, slot_model(s, k - 1), t.bins_[n_laws == 1 ? 0 : k - 1], opt);
            next = stage.value;
            stages.push_back(std::move(stage));
        }
        for (auto it = stages.rbegin(); it != stages.rend(); ++it) {
            t.values_.push_back(std::move(it->value));
            t.actions_.push_back(std::move(it->actions));
        }
        t.iterations_ = K;
        return t;
    }
    const SlotModel m = slot_model(s, 0);
    for (std::size_t i = 1;; ++i) {
        auto stage = dmdp_backup(next, m, t.bins_[0], opt);
        const double d = pwl::sup_distance(stage.value, next);
        next = stage.value;
        if (d <= opt.alpha || i >= opt.max_iters) {
            if (d > opt.alpha) {
                throw ConvergenceError("discrete MDP value iteration did not converge", {d});
            }
            t.values_.push_back(std::move(stage.value));
            t.actions_.push_back(std::move(stage.actions));
            t.iterations_ = i;
            return t;
        }
    }
}

DiscreteMdpPolicy::DiscreteMdpPolicy(const DiscreteMdpTable& table, const Scenario& s) : table_(&table), s_(&s) {
    if (table.finite() != s.finite() || (s.finite() && table.horizon() != *s.horizon)) {
        throw ContractError("discrete MDP table horizon does not match the scenario");
    }
}

std::string DiscreteMdpPolicy::name() const { return "dmdp(delta=" + text::format_short(table_->delta()) + ")"; }

double DiscreteMdpPolicy::power(const Observation& obs) const {
    if (obs.access == Access::denied) return 0.0;
    if (table_->finite() && (obs.k < 1 || obs.k > table_->horizon())) throw DomainError("slot outside the horizon");
    const auto& grid = table_->grid();
    const std::size_t i = table_->rounding() == TransitionRounding::nearest ? grid.nearest_index(obs.b)
                                                                            : grid.floor_index(obs.b);
    const std::size_t c = table_->bins(obs.k).lookup(obs.h);
    const double p = table_->action(obs.k, i, c);
    return std::min({p, s_->p_max, obs.b / s_->slot_length});
}

// ---------------------------------------------------------------- offline optimum

OfflineSolution offline_noncausal_optimum(const Scenario& s, const Realization& r, double delta_ref) {
    const std::size_t K = r.h.size();
    if (K == 0 || r.access.size() != K || r.error.size() != K) throw ContractError("malformed realization");
    if (s.finite() && K != *s.horizon) throw ContractError("realization length differs from the horizon");
    const BatteryGrid grid(s.b_max, delta_ref);
    const double no_error[] = {0.0};
    const double one[] = {1.0};
    const bool closed_form = s.payoff.is_log_rate();

    auto net = [&](std::size_t k) { return s.prediction(k) + r.error[k]; };
    auto solve = [&](const ProfileWindow& w, std::size_t k) {
        if (r.access[k] == Access::denied || r.h[k] == 0.0) return 0.0;
        return closed_form ? water_fill(w, r.h[k]) : bisection_allocation(w, s.payoff, r.h[k]);
    };

    std::vector<ContinuationProfile> profiles;
    profiles.reserve(K);
    std::vector<double> bounds;
    PwlValue next = PwlValue::zero(grid);
    for (std::size_t k = K; k-- > 0;) {
        profiles.emplace_back(next, no_error, one, std::array<double, 2>{0.0, 1.0});
        const auto& profile = profiles.back();
        std::vector<double> v(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto w = profile.window(grid.point(i), net(k), s.p_max, s.slot_length, s.gamma);
            const double p = solve(w, k);
            v[i] = (r.access[k] == Access::granted ? s.payoff.value(p, r.h[k]) : 0.0) + w.value(p);
        }
        PwlValue value(grid, v, v);
        bounds.push_back(approximation_error_bound(value));
        next = std::move(value);
    }

    OfflineSolution out;
    out.error_bound = accumulated_error_bound(bounds, s.gamma);
    double b = s.b0;
    double discount = 1.0;
    for (std::size_t k = 0; k < K; ++k) {
        const auto& profile = profiles[K - 1 - k];
        const auto w = profile.window(b, net(k), s.p_max, s.slot_length, s.gamma);
        const double p = solve(w, k);
        out.powers.push_back(p);
        if (r.access[k] == Access::granted) out.payoff += discount * s.payoff.value(p, r.h[k]);
        discount *= s.gamma;
        b = std::min(s.b_max, b + s.prediction(k) + r.error[k] - p * s.slot_length);
        if (b < 0.0) {
            if (b < -1e-12) throw ContractError("offline solution drives the battery negative");
            b = 0.0;
        }
    }
    return out;
}

}  // namespace ehpa
