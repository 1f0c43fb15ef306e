#include "ehpa/planner.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "ehpa/errors.hpp"
#include "ehpa/text.hpp"

namespace ehpa {

using text::format_double;

const PwlValue& PolicyTable::value(std::size_t k) const {
    if (kind == Kind::infinite) return values.front();
    if (k < 1 || k > values.size()) {
        throw DomainError("slot " + std::to_string(k) + " is outside the horizon 1.." + std::to_string(values.size()));
    }
    return values[k - 1];
}

double PolicyTable::value_error_bound() const {
    if (kind == Kind::finite) return accumulated_bounds.empty() ? 0.0 : accumulated_bounds.front();
    return fixed_point_bound(*this, alpha, gamma);
}

std::string scenario_fingerprint(const Scenario& s, double delta, double alpha) {
    const std::string key = s.describe() + "delta=" + format_double(delta) + "\nalpha=" + format_double(alpha) + "\n";
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : key) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

PolicyTable plan_finite(const Scenario& s, const PlannerOptions& opt) {
    s.validate();
    if (!s.finite()) throw ContractError("plan_finite needs a finite horizon");
    const BatteryGrid grid(s.b_max, opt.delta);
    const std::size_t K = *s.horizon;
    PolicyTable t;
    t.kind = PolicyTable::Kind::finite;
    t.delta = opt.delta;
    t.alpha = opt.alpha;
    t.gamma = s.gamma;
    t.fingerprint = scenario_fingerprint(s, opt.delta, opt.alpha);

    std::vector<PwlValue> backward;
    std::vector<double> bounds;
    PwlValue next = PwlValue::zero(grid);
    for (std::size_t k = K; k >= 1; --k) {
        auto r = backup(next, slot_model(s, k - 1), opt.backup);
        bounds.push_back(r.error_bound);
        if (opt.on_iteration) opt.on_iteration(K - k + 1, r);
        next = r.value;
        backward.push_back(std::move(r.value));
    }
    t.values.assign(backward.rbegin(), backward.rend());
    t.error_bounds.assign(bounds.rbegin(), bounds.rend());
    // accumulated bound of W^k adds eps_k to the discounted bound of W^{k+1}
    t.accumulated_bounds.assign(K, 0.0);
    double acc = 0.0;
    for (std::size_t k = K; k >= 1; --k) {
        acc = acc * s.gamma + t.error_bounds[k - 1];
        t.accumulated_bounds[k - 1] = acc;
    }
    t.iterations = K;
    return t;
}

PolicyTable plan_infinite(const Scenario& s, const PlannerOptions& opt) {
    s.validate();
    if (s.finite()) throw ContractError("plan_infinite needs an infinite horizon");
    if (!(s.gamma < 1.0)) throw ContractError("infinite horizon requires gamma < 1");
    if (!(opt.alpha > 0.0)) throw ContractError("convergence tolerance alpha must be positive");
    const BatteryGrid grid(s.b_max, opt.delta);
    const SlotModel m = slot_model(s, 0);
    PolicyTable t;
    t.kind = PolicyTable::Kind::infinite;
    t.delta = opt.delta;
    t.alpha = opt.alpha;
    t.gamma = s.gamma;
    t.fingerprint = scenario_fingerprint(s, opt.delta, opt.alpha);

    PwlValue current = PwlValue::zero(grid);
    std::optional<std::size_t> limit = opt.max_iters;
    double acc = 0.0;
    for (std::size_t i = 1;; ++i) {
        auto r = backup(current, m, opt.backup);
        const double d = pwl::sup_distance(r.value, current);
        t.trace.push_back(d);
        t.error_bounds.push_back(r.error_bound);
        acc = acc * s.gamma + r.error_bound;
        t.accumulated_bounds.push_back(acc);
        if (opt.on_iteration) opt.on_iteration(i, r);
        current = std::move(r.value);
        if (!limit) {
            std::size_t guess = 500;
            if (s.gamma > 0.0 && d > opt.alpha) {
                const double steps = std::ceil(std::log(opt.alpha / d) / std::log(s.gamma));
                guess = std::max<std::size_t>(500, static_cast<std::size_t>(10.0 * steps));
            }
            limit = guess;
        }
        if (d <= opt.alpha) {
            t.iterations = i;
            break;
        }
        if (i >= *limit) {
            throw ConvergenceError("value iteration did not reach alpha = " + format_double(opt.alpha) + " within " +
                                       std::to_string(*limit) + " iterations (last sup-distance " +
                                       format_double(d) + ")",
                                   t.trace);
        }
    }
    t.values.push_back(std::move(current));
    return t;
}

PolicyTable plan(const Scenario& s, const PlannerOptions& opt) {
    return s.finite() ? plan_finite(s, opt) : plan_infinite(s, opt);
}

double fixed_point_bound(const PolicyTable& table, double alpha, double gamma) {
    if (table.kind != PolicyTable::Kind::infinite) {
        throw ContractError("fixed_point_bound needs an infinite-horizon table");
    }
    if (!(gamma < 1.0)) throw ContractError("fixed_point_bound needs gamma < 1");
    return (gamma * alpha + approximation_error_bound(table.values.front())) / (1.0 - gamma);
}

// ---------------------------------------------------------------- Allocator

Allocator::Allocator(const PolicyTable& table, const Scenario& s, bool force_bisection, std::string label)
    : scenario_(&s), finite_(table.kind == PolicyTable::Kind::finite), force_bisection_(force_bisection),
      label_(label.empty() ? "proposed(delta=" + text::format_short(table.delta) + ")" : std::move(label)) {
    if (table.values.empty()) throw ContractError("empty policy table");
    if (finite_ != s.finite() || (finite_ && table.values.size() != *s.horizon)) {
        throw ConfigError("policy table horizon does not match the scenario");
    }
    const auto expected = scenario_fingerprint(s, table.delta, table.alpha);
    if (table.fingerprint != expected) {
        throw ConfigError("policy table fingerprint " + table.fingerprint + " does not match scenario fingerprint " +
                          expected);
    }
    const auto& grid = table.values.front().grid();
    if (finite_) {
        const std::size_t K = table.values.size();
        const PwlValue zero = PwlValue::zero(grid);
        profiles_.reserve(K);
        for (std::size_t k = 1; k <= K; ++k) {
            const PwlValue& next = k < K ? table.values[k] : zero;
            profiles_.push_back(make_profile(next, s.harvest.error(), s.access, Access::granted));
        }
    } else {
        profiles_.push_back(make_profile(table.values.front(), s.harvest.error(), s.access, Access::granted));
    }
}

void Allocator::check(const Observation& obs) const {
    const auto& s = *scenario_;
    if (!(obs.b >= 0.0) || obs.b > s.b_max * (1.0 + 1e-12)) {
        throw DomainError("battery level " + format_double(obs.b) + " outside [0, " + format_double(s.b_max) + "]");
    }
    if (!(obs.h >= 0.0) || !std::isfinite(obs.h)) throw DomainError("channel gain must be finite and >= 0");
    if (finite_ && (obs.k < 1 || obs.k > profiles_.size())) {
        throw DomainError("slot " + std::to_string(obs.k) + " is outside the horizon 1.." +
                          std::to_string(profiles_.size()));
    }
}

ProfileWindow Allocator::window(const Observation& obs) const {
    const auto& s = *scenario_;
    const std::size_t slot = finite_ ? obs.k - 1 : 0;
    const double b = std::min(obs.b, s.b_max);
    return profiles_[finite_ ? slot : 0].window(b, s.prediction(slot), s.p_max, s.slot_length, s.gamma);
}

double Allocator::power(const Observation& obs) const {
    check(obs);
    if (obs.access == Access::denied) return 0.0;
    const auto w = window(obs);
    if (scenario_->payoff.is_log_rate() && !force_bisection_) return water_fill(w, obs.h);
    return bisection_allocation(w, scenario_->payoff, obs.h);
}

SegmentedDerivative Allocator::staircase(const Observation& obs) const {
    check(obs);
    return window(obs).materialize();
}

double allocate(const PolicyTable& table, const Observation& obs, const Scenario& s) {
    return Allocator(table, s).power(obs);
}

// ---------------------------------------------------------------- persistence

namespace {

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    return out;
}

std::vector<double> parse_list(const std::string& s, const char* what) {
    if (s.empty()) return {};
    return text::parse_double_list(s, what);
}

std::map<std::string, std::string> read_metadata(const std::string& content) {
    std::map<std::string, std::string> meta;
    std::istringstream in(content);
    std::string line;
    while (std::getline(in, line)) {
        const auto t = text::trim(line);
        if (t.size() < 2 || t.front() != '#') continue;
        const auto body = text::trim(t.substr(1));
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) continue;
        const std::string key(text::trim(body.substr(0, eq)));
        if (key == "slot") continue;
        meta[key] = std::string(text::trim(body.substr(eq + 1)));
    }
    return meta;
}

const std::string& required(const std::map<std::string, std::string>& meta, const std::string& key) {
    const auto it = meta.find(key);
    if (it == meta.end()) throw ConfigError("policy table: missing metadata key '" + key + "'");
    return it->second;
}

}  // namespace

void save_table(std::ostream& out, const PolicyTable& table) {
    const bool finite = table.kind == PolicyTable::Kind::finite;
    out << "# ehpa policy table\n";
    out << "# kind=" << (finite ? "finite" : "infinite") << '\n';
    out << "# fingerprint=" << table.fingerprint << '\n';
    out << "# delta=" << format_double(table.delta) << '\n';
    out << "# gamma=" << format_double(table.gamma) << '\n';
    out << "# alpha=" << format_double(table.alpha) << '\n';
    out << "# horizon=" << (finite ? std::to_string(table.values.size()) : std::string("infinite")) << '\n';
    out << "# iterations=" << table.iterations << '\n';
    out << "# error_bounds=" << join(table.error_bounds) << '\n';
    out << "# accumulated_bounds=" << join(table.accumulated_bounds) << '\n';
    out << "# trace=" << join(table.trace) << '\n';
    if (!finite) {
        out << "# fixed_point_bound=" << format_double(fixed_point_bound(table, table.alpha, table.gamma)) << '\n';
        out << "# fixed_point_bound_note=curvature term taken from the converged function, not the exact fixed point\n";
    }
    for (std::size_t k = 0; k < table.values.size(); ++k) {
        out << "\n# slot=" << (finite ? std::to_string(k + 1) : std::string("all")) << '\n';
        pwl::write_table(out, table.values[k]);
    }
}

PolicyTable load_table(std::istream& in) {
    const std::string content{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    const auto meta = read_metadata(content);
    PolicyTable t;
    const auto& kind = required(meta, "kind");
    if (kind == "finite") {
        t.kind = PolicyTable::Kind::finite;
    } else if (kind == "infinite") {
        t.kind = PolicyTable::Kind::infinite;
    } else {
        throw ConfigError("policy table: unknown kind '" + kind + "'");
    }
    t.fingerprint = required(meta, "fingerprint");
    t.delta = text::parse_double(required(meta, "delta"), "delta");
    t.gamma = text::parse_double(required(meta, "gamma"), "gamma");
    t.alpha = text::parse_double(required(meta, "alpha"), "alpha");
    const long iterations = text::parse_long(required(meta, "iterations"), "iterations");
    if (iterations < 0) throw ConfigError("policy table: negative iteration count");
    t.iterations = static_cast<std::size_t>(iterations);
    t.error_bounds = parse_list(required(meta, "error_bounds"), "error_bounds");
    t.accumulated_bounds = parse_list(required(meta, "accumulated_bounds"), "accumulated_bounds");
    t.trace = parse_list(required(meta, "trace"), "trace");
    std::size_t blocks = 1;
    if (t.kind == PolicyTable::Kind::finite) {
        const long K = text::parse_long(required(meta, "horizon"), "horizon");
        if (K < 1) throw ConfigError("policy table: horizon must be positive");
        blocks = static_cast<std::size_t>(K);
        if (t.error_bounds.size() != blocks || t.accumulated_bounds.size() != blocks) {
            throw ConfigError("policy table: bound series length does not match the horizon");
        }
    }
    std::vector<std::string> markers;
    {
        std::istringstream scan(content);
        std::string line;
        while (std::getline(scan, line)) {
            const auto l = text::trim(line);
            if (l.rfind("# slot=", 0) == 0) markers.emplace_back(l.substr(7));
        }
    }
    if (markers.size() != blocks) {
        throw ConfigError("policy table: expected " + std::to_string(blocks) + " slot blocks");
    }
    for (std::size_t k = 0; k < blocks; ++k) {
        const std::string want = t.kind == PolicyTable::Kind::finite ? std::to_string(k + 1) : "all";
        if (markers[k] != want) {
            throw ConfigError("policy table: block " + std::to_string(k + 1) + " is labelled slot=" + markers[k]);
        }
    }
    std::istringstream body(content);
    for (std::size_t k = 0; k < blocks; ++k) {
        t.values.push_back(pwl::read_table(body));
        if (std::abs(t.values.back().grid().delta() - t.delta) > 1e-9 * t.delta) {
            throw ConfigError("policy table: block " + std::to_string(k + 1) + " grid spacing differs from delta");
        }
        if (!(t.values.back().grid() == t.values.front().grid())) {
            throw ConfigError("policy table: blocks use different grids");
        }
    }
    std::string rest;
    while (std::getline(body, rest)) {
        const auto r = text::trim(rest);
        if (!r.empty() && r.front() != '#') throw ConfigError("policy table: unexpected content after the last block");
    }
    return t;
}

TableReport validate_table(std::istream& in) {
    TableReport report;
    try {
        const auto t = load_table(in);
        report.kind = t.kind == PolicyTable::Kind::finite ? "finite" : "infinite";
        report.blocks = t.values.size();
        if (t.fingerprint.size() != 16 || t.fingerprint.find_first_not_of("0123456789abcdef") != std::string::npos) {
            report.problems.push_back("fingerprint is not 16 lowercase hex digits");
        }
        if (!(t.delta > 0.0)) report.problems.push_back("delta must be positive");
        if (!(t.gamma >= 0.0 && t.gamma <= 1.0)) report.problems.push_back("gamma must lie in [0, 1]");
        for (std::size_t k = 0; k < t.values.size(); ++k) {
            const auto shape = pwl::shape_check(t.values[k]);
            if (!shape.passed) report.problems.push_back("block " + std::to_string(k + 1) + " fails the shape check");
        }
        for (double e : t.error_bounds) {
            if (!(e >= 0.0)) report.problems.push_back("negative error bound");
        }
        if (t.kind == PolicyTable::Kind::infinite && t.trace.size() != t.iterations) {
            report.problems.push_back("trace length differs from the iteration count");
        }
    } catch (const std::exception& e) {
        report.problems.push_back(e.what());
    }
    report.valid = report.problems.empty();
    return report;
}

}  // namespace ehpa
