#include "ehpa/experiments.hpp"

#include <cmath>
#include <exception>
#include <fstream>
#include <memory>
#include <ostream>

#include <json.hpp>

#include "ehpa/baselines.hpp"
#include "ehpa/errors.hpp"
#include "ehpa/text.hpp"

namespace ehpa {

using text::format_short;

Scenario finite_scenario(double harvest_mean, double sigma, std::uint64_t harvest_seed) {
    Scenario s;
    s.channels = {ChannelLaw::rayleigh(sigma)};
    s.horizon = 30;
    s.gamma = 1.0;
    s.harvest = HarvestSchedule(truncated_gaussian_predictions(harvest_mean, 2.0, 30, harvest_seed), ErrorLaw::none());
    s.validate();
    return s;
}

Scenario infinite_scenario(double sigma, double gamma) {
    Scenario s;
    s.channels = {ChannelLaw::rayleigh(sigma)};
    s.horizon.reset();
    s.gamma = gamma;
    s.harvest = HarvestSchedule({3.0}, ErrorLaw::none());
    s.validate();
    return s;
}

Scenario prediction_error_scenario(double v, double sigma) {
    Scenario s;
    s.channels = {ChannelLaw::rayleigh(sigma)};
    s.horizon = 10;
    s.gamma = 1.0;
    s.access = AccessChain(0.0, 1.0);
    s.initial_access = Access::granted;
    s.harvest = HarvestSchedule({3.5}, ErrorLaw::uniform(v, 0.1));
    s.validate();
    return s;
}

const PolicyResult& SweepPoint::find(const std::string& policy) const {
    for (const auto& r : results) {
        if (r.summary.policy == policy) return r;
    }
    throw ContractError("no result for policy '" + policy + "' at sweep point " + label);
}

namespace {

template <class Fn>
auto with_context(const std::string& where, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(where + ": " + e.what(), e.trace);
    } catch (const NumericError& e) {
        throw NumericError(where + ": " + e.what());
    } catch (const ContractError& e) {
        throw ContractError(where + ": " + e.what());
    } catch (const DomainError& e) {
        throw DomainError(where + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

bool deterministic(const Scenario& s) {
    for (const auto& c : s.channels) {
        if (c.kind() != ChannelLaw::Kind::degenerate) return false;
    }
    if (s.harvest.error().atoms().size() != 1) return false;
    auto binary = [](double x) { return x == 0.0 || x == 1.0; };
    return binary(s.initial_granted_probability()) && binary(s.access.q()) && binary(s.access.q_tilde());
}

}  // namespace

SweepPoint evaluate_policies(const Scenario& s, const std::vector<double>& deltas, double alpha, std::size_t trials,
                             std::uint64_t seed, const std::string& label) {
    return with_context(label, [&] {
        SweepPoint point;
        point.label = label;
        for (double delta : deltas) {
            PlannerOptions opt;
            opt.delta = delta;
            opt.alpha = alpha;
            const auto table = plan(s, opt);
            const Allocator policy(table, s);
            auto summary = evaluate(policy, s, trials, seed);
            const double ub = summary.mean + table.value_error_bound();
            point.results.push_back({std::move(summary), ub});
        }
        for (double delta : deltas) {
            DiscreteMdpOptions opt;
            opt.delta = delta;
            opt.alpha = alpha;
            const auto table = discrete_mdp_plan(s, opt);
            const DiscreteMdpPolicy policy(table, s);
            point.results.push_back({evaluate(policy, s, trials, seed), std::nullopt});
        }
        const GreedyPolicy greedy(s);
        point.results.push_back({evaluate(greedy, s, trials, seed), std::nullopt});
        const BalancedPolicy balanced(s);
        point.results.push_back({evaluate(balanced, s, trials, seed), std::nullopt});
        return point;
    });
}

PredictionErrorPoint evaluate_prediction_error(const Scenario& s, std::size_t trials, std::uint64_t seed, double delta,
                                               double delta_ref) {
    if (!s.finite()) throw ContractError("prediction-error evaluation needs a finite horizon");
    if (trials < 2) throw ContractError("need at least two trials");
    const std::size_t K = *s.horizon;
    std::vector<double> proposed(trials), offline(trials), offline_bound(trials), proposed_bound(trials);
    std::exception_ptr failure;
    const auto count = static_cast<long>(trials);
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < count; ++i) {
        try {
            const auto trial_seed = seed + static_cast<std::uint64_t>(i);
            const auto r = sample_trajectory(s, trial_seed, K);
            Scenario known = s;
            known.channels.clear();
            for (double h : r.h) known.channels.push_back(ChannelLaw::degenerate(h));
            PlannerOptions opt;
            opt.delta = delta;
            const auto table = plan_finite(known, opt);
            const Allocator policy(table, known);
            proposed[i] = run_trial(policy, known, r, trial_seed).total;
            proposed_bound[i] = table.value_error_bound();
            const auto best = offline_noncausal_optimum(s, r, delta_ref);
            const ScheduledPolicy replay(best.powers, "offline");
            offline[i] = run_trial(replay, s, r, trial_seed).total;
            offline_bound[i] = best.error_bound;
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    PredictionErrorPoint out;
    out.proposed = summarize("proposed(delta=" + format_short(delta) + ")", std::move(proposed));
    out.offline = summarize("offline", std::move(offline));
    for (double b : offline_bound) out.offline_bound = std::max(out.offline_bound, b);
    double sum = 0.0;
    for (double b : proposed_bound) sum += b;
    out.proposed_bound = sum / static_cast<double>(trials);
    return out;
}

ExperimentPreset make_preset(const std::string& name) {
    ExperimentPreset p;
    p.name = name;
    if (name == "fig5-energy-constrained" || name == "fig6-power-constrained" || name == "fig7-infinite") {
        p.sweep = {0.7, 0.8, 0.9, 1.0, 1.1, 1.2};
        if (name == "fig7-infinite") p.gamma = 0.85;
    } else if (name == "fig7-convergence") {
        p.sweep = {0.8, 0.85, 0.9};
        p.deltas = {0.1};
    } else if (name == "fig8-prediction-error") {
        p.sweep = {0.0, 0.5, 1.0, 1.5, 2.0, 2.5};
        p.deltas = {0.1};
        p.trials = 2000;
    } else if (name != "custom") {
        throw ConfigError("unknown preset '" + name + "'");
    }
    return p;
}

namespace {

void write_rows(std::ostream& out, const SweepPoint& point, nlohmann::json& meta) {
    nlohmann::json entry;
    entry["sweep"] = point.label;
    for (const auto& r : point.results) {
        write_csv_row(out, {point.label, r.summary.policy, r.summary.mean, r.summary.stderr_, r.summary.trials,
                            r.upper_bound});
        entry["policies"][r.summary.policy] = {{"mean", r.summary.mean}, {"stderr", r.summary.stderr_}};
    }
    meta["points"].push_back(entry);
}

}  // namespace

std::vector<std::filesystem::path> run_experiment(const ExperimentPreset& preset, const std::filesystem::path& out,
                                                  std::ostream* log) {
    std::filesystem::create_directories(out);
    std::vector<std::filesystem::path> written;
    const auto csv_path = out / (preset.name + ".csv");
    std::ofstream csv(csv_path);
    if (!csv) throw ConfigError("cannot write " + csv_path.string());
    written.push_back(csv_path);

    nlohmann::json meta;
    meta["preset"] = preset.name;
    meta["trials"] = preset.trials;
    meta["seed"] = preset.seed;
    meta["alpha"] = preset.alpha;
    meta["deltas"] = preset.deltas;
    meta["sweep"] = preset.sweep;
    meta["points"] = nlohmann::json::array();
    auto note = [&](const std::string& msg) {
        if (log) *log << msg << std::endl;
    };

    const auto& name = preset.name;
    if (name == "fig5-energy-constrained" || name == "fig6-power-constrained" || name == "fig7-infinite") {
        meta["sweep_parameter"] = "sigma";
        meta["upper_bound"] = name == "fig7-infinite"
                                  ? "proposed mean + (gamma alpha + beta) / (1 - gamma), beta from the converged table"
                                  : "proposed mean + accumulated grid-approximation bound of the first-slot table";
        write_csv_header(csv);
        for (double sigma : preset.sweep) {
            Scenario s = name == "fig7-infinite" ? infinite_scenario(sigma, preset.gamma.value_or(0.85))
                                                 : finite_scenario(name == "fig5-energy-constrained" ? 2.0 : 4.0, sigma);
            if (preset.gamma && name != "fig7-infinite") s.gamma = *preset.gamma;
            const auto label = format_short(sigma);
            note(name + ": sigma = " + label);
            const auto point = evaluate_policies(s, preset.deltas, preset.alpha, preset.trials, preset.seed, label);
            write_rows(csv, point, meta);
            if (meta.find("harvest") == meta.end()) meta["harvest"] = s.harvest.predictions();
        }
    } else if (name == "fig7-convergence") {
        meta["sweep_parameter"] = "gamma";
        csv << "gamma,iteration,sup_distance,accumulated_bound\n";
        for (double gamma : preset.sweep) {
            const auto s = infinite_scenario(1.0, gamma);
            PlannerOptions opt;
            opt.delta = preset.deltas.front();
            opt.alpha = preset.alpha;
            const auto table = with_context("gamma = " + format_short(gamma), [&] { return plan_infinite(s, opt); });
            note(name + ": gamma = " + format_short(gamma) + " converged after " + std::to_string(table.iterations) +
                 " iterations");
            for (std::size_t i = 0; i < table.trace.size(); ++i) {
                csv << format_short(gamma) << ',' << (i + 1) << ',' << text::format_double(table.trace[i]) << ','
                    << text::format_double(table.accumulated_bounds[i]) << '\n';
            }
            meta["points"].push_back({{"gamma", gamma},
                                      {"iterations", table.iterations},
                                      {"fingerprint", table.fingerprint},
                                      {"fixed_point_bound", fixed_point_bound(table, preset.alpha, gamma)}});
        }
        meta["fixed_point_bound_note"] = "curvature term taken from the converged table, not the exact fixed point";
    } else if (name == "fig8-prediction-error") {
        meta["sweep_parameter"] = "v";
        meta["offline_delta"] = preset.deltas.front() / 10.0;
        meta["upper_bound"] = "proposed mean + mean accumulated grid bound of the per-trial tables";
        write_csv_header(csv);
        const auto gap_path = out / (name + ".gap.csv");
        std::ofstream gap(gap_path);
        if (!gap) throw ConfigError("cannot write " + gap_path.string());
        written.push_back(gap_path);
        gap << "v,gap_mean,gap_stderr,offline_mean,gap_ratio\n";
        for (double v : preset.sweep) {
            const auto label = format_short(v);
            note(name + ": v = " + label);
            const auto s = prediction_error_scenario(v);
            const auto point = with_context("v = " + label, [&] {
                return evaluate_prediction_error(s, preset.trials, preset.seed, preset.deltas.front(),
                                                 preset.deltas.front() / 10.0);
            });
            SweepPoint rows;
            rows.label = label;
            rows.results.push_back({point.proposed, point.proposed.mean + point.proposed_bound});
            rows.results.push_back({point.offline, std::nullopt});
            write_rows(csv, rows, meta);
            const auto diff = paired_difference(point.offline, point.proposed);
            gap << label << ',' << text::format_double(diff.mean) << ',' << text::format_double(diff.stderr_) << ','
                << text::format_double(point.offline.mean) << ','
                << text::format_double(diff.mean / point.offline.mean) << '\n';
        }
    } else if (name == "custom") {
        if (!preset.custom) throw ConfigError("the custom preset needs --config");
        const auto& cfg = *preset.custom;
        const auto& s = cfg.scenario;
        meta["scenario"] = s.describe();
        write_csv_header(csv);
        auto point = evaluate_policies(s, preset.deltas, preset.alpha, preset.trials, preset.seed, "custom");
        if (s.finite() && deterministic(s)) {
            const auto r = sample_trajectory(s, preset.seed, *s.horizon);
            const auto best = offline_noncausal_optimum(s, r, preset.deltas.back() / 10.0);
            const ScheduledPolicy replay(best.powers, "offline");
            point.results.push_back({evaluate(replay, s, preset.trials, preset.seed), std::nullopt});
        }
        write_rows(csv, point, meta);
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }

    const auto meta_path = out / (name + ".meta.json");
    std::ofstream meta_out(meta_path);
    if (!meta_out) throw ConfigError("cannot write " + meta_path.string());
    meta_out << meta.dump(2) << '\n';
    written.push_back(meta_path);
    return written;
}

}  // namespace ehpa
