#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ehpa/config.hpp"
#include "ehpa/errors.hpp"
#include "ehpa/experiments.hpp"
#include "ehpa/planner.hpp"
#include "ehpa/sim.hpp"
#include "ehpa/text.hpp"

namespace {

using namespace ehpa;

constexpr int kUsageError = 2;
constexpr int kNumericError = 3;

struct Overrides {
    std::optional<double> delta, alpha, gamma;
    std::optional<std::size_t> trials;
    std::optional<std::uint64_t> seed;

    void add_to(CLI::App* cmd, bool sim) {
        cmd->add_option("--delta", delta, "battery grid step");
        cmd->add_option("--alpha", alpha, "value-iteration tolerance");
        cmd->add_option("--gamma", gamma, "discount factor");
        if (sim) {
            cmd->add_option("--trials", trials, "Monte-Carlo trials");
            cmd->add_option("--seed", seed, "first trial seed");
        }
    }
    void apply(RunConfig& cfg) const {
        if (delta) cfg.delta = *delta;
        if (alpha) cfg.alpha = *alpha;
        if (gamma) cfg.scenario.gamma = *gamma;
        try {
            cfg.scenario.validate();
        } catch (const ContractError& e) {
            throw ConfigError(e.what());
        }
    }
};

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    return out;
}

PolicyTable read_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open policy table '" + path + "'");
    return load_table(in);
}

int cmd_plan(const std::string& config, const std::string& out, const Overrides& o) {
    auto cfg = load_config(config);
    o.apply(cfg);
    PlannerOptions opt;
    opt.delta = cfg.delta;
    opt.alpha = cfg.alpha;
    opt.max_iters = cfg.max_iters;
    const auto table = plan(cfg.scenario, opt);
    auto file = open_out(out);
    save_table(file, table);
    std::cout << "kind=" << (table.kind == PolicyTable::Kind::finite ? "finite" : "infinite")
              << "\niterations=" << table.iterations << "\nfingerprint=" << table.fingerprint
              << "\nvalue_error_bound=" << text::format_double(table.value_error_bound()) << '\n';
    return 0;
}

int cmd_allocate(const std::string& config, const std::string& table_path, const Overrides& o, double b, double h,
                 long a, std::size_t k) {
    auto cfg = load_config(config);
    o.apply(cfg);
    const auto table = read_table_file(table_path);
    const Allocator allocator(table, cfg.scenario);
    Observation obs;
    obs.b = b;
    obs.h = h;
    obs.k = k;
    double p = 0.0;
    SegmentedDerivative d;
    try {
        obs.access = access_from_int(a);
        p = allocator.power(obs);
        if (obs.access == Access::granted) d = allocator.staircase(obs);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("observation out of range: ") + e.what());
    }
    std::cout << "power=" << text::format_double(p) << '\n';
    if (obs.access == Access::granted) {
        std::cout << "# staircase of the continuation value\nsegment\tp_left\tp_right\tslope\n";
        for (std::size_t i = 0; i < d.segments(); ++i) {
            std::cout << i << '\t' << text::format_double(d.breakpoints[i]) << '\t'
                      << text::format_double(d.breakpoints[i + 1]) << '\t' << text::format_double(d.slopes[i])
                      << '\n';
        }
    }
    return 0;
}

int cmd_evaluate(const std::string& config, const std::string& out, const Overrides& o) {
    auto cfg = load_config(config);
    o.apply(cfg);
    const auto point = evaluate_policies(cfg.scenario, {cfg.delta}, cfg.alpha, o.trials.value_or(10000),
                                         o.seed.value_or(1), "config");
    std::ofstream file;
    std::ostream* sink = &std::cout;
    if (!out.empty()) {
        file = open_out(out);
        sink = &file;
    }
    write_csv_header(*sink);
    for (const auto& r : point.results) {
        write_csv_row(*sink, {point.label, r.summary.policy, r.summary.mean, r.summary.stderr_, r.summary.trials,
                              r.upper_bound});
    }
    return 0;
}

int cmd_experiment(const std::string& preset_name, const std::string& config, const std::string& out,
                   const Overrides& o) {
    auto preset = make_preset(preset_name);
    if (!config.empty()) {
        auto cfg = load_config(config);
        o.apply(cfg);
        preset.deltas = {cfg.delta};
        preset.alpha = cfg.alpha;
        preset.custom = cfg;
    }
    if (o.delta) preset.deltas = {*o.delta};
    if (o.alpha) preset.alpha = *o.alpha;
    if (o.gamma) preset.gamma = *o.gamma;
    if (o.trials) preset.trials = *o.trials;
    if (o.seed) preset.seed = *o.seed;
    const auto files = run_experiment(preset, out.empty() ? "results" : out, &std::cerr);
    for (const auto& f : files) std::cout << f.string() << '\n';
    return 0;
}

int cmd_validate(const std::string& table_path) {
    std::ifstream in(table_path);
    if (!in) throw ConfigError("cannot open policy table '" + table_path + "'");
    const auto report = validate_table(in);
    std::cout << (report.valid ? "valid" : "invalid") << " kind=" << report.kind << " blocks=" << report.blocks
              << '\n';
    for (const auto& p : report.problems) std::cout << "problem: " << p << '\n';
    return report.valid ? 0 : kUsageError;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef _OPENMP
    if (const char* threads = std::getenv("EHPA_THREADS")) {
        const int n = std::atoi(threads);
        if (n > 0) omp_set_num_threads(n);
    }
#endif
    CLI::App app{"Power allocation for an energy-harvesting transmitter with access control"};
    app.set_help_flag("--help", "print this help");
    app.require_subcommand(1);

    std::string config, out, table, preset;
    double b = 0.0, h = 0.0;
    long a = 1;
    std::size_t k = 1;
    Overrides o;

    auto* plan_cmd = app.add_subcommand("plan", "compute and store a policy table");
    plan_cmd->add_option("--config", config, "scenario config")->required();
    plan_cmd->add_option("--out", out, "policy table path")->required();
    o.add_to(plan_cmd, false);

    auto* alloc_cmd = app.add_subcommand("allocate", "one online allocation from a stored table");
    alloc_cmd->add_option("--config", config, "scenario config the table was planned for")->required();
    alloc_cmd->add_option("--table", table, "policy table path")->required();
    alloc_cmd->add_option("--b", b, "battery level")->required();
    alloc_cmd->add_option("--h", h, "channel gain")->required();
    alloc_cmd->add_option("--A", a, "access state (0 or 1)")->required();
    alloc_cmd->add_option("--k", k, "slot index (1-based, finite horizon)");
    o.add_to(alloc_cmd, false);

    auto* eval_cmd = app.add_subcommand("evaluate", "plan and simulate all policies for a config");
    eval_cmd->add_option("--config", config, "scenario config")->required();
    eval_cmd->add_option("--out", out, "CSV path (default stdout)");
    o.add_to(eval_cmd, true);

    auto* exp_cmd = app.add_subcommand("experiment", "run an experiment preset");
    exp_cmd->add_option("--preset", preset, "preset name")->required();
    exp_cmd->add_option("--config", config, "scenario config (custom preset)");
    exp_cmd->add_option("--out", out, "output directory (default ./results)");
    o.add_to(exp_cmd, true);

    auto* val_cmd = app.add_subcommand("validate-table", "check a stored policy table");
    val_cmd->add_option("--table", table, "policy table path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        if (*plan_cmd) return cmd_plan(config, out, o);
        if (*alloc_cmd) return cmd_allocate(config, table, o, b, h, a, k);
        if (*eval_cmd) return cmd_evaluate(config, out, o);
        if (*exp_cmd) return cmd_experiment(preset, config, out, o);
        if (*val_cmd) return cmd_validate(table);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumericError;
    }
    return kUsageError;
}
