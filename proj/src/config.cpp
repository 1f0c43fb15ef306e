#include "ehpa/config.hpp"

#include <fstream>
#include <istream>
#include <set>

#include "ehpa/errors.hpp"
#include "ehpa/text.hpp"

namespace ehpa {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "horizon",        "gamma",         "delta",          "alpha",         "max_iters",      "p_max",
        "b_max",          "b0",            "slot_length",    "channel.kind",  "channel.sigma",  "channel.mean",
        "channel.atoms",  "channel.probs", "channel.h0",     "access.q",      "access.q_tilde", "access.initial",
        "harvest.kind",   "harvest.value", "harvest.values", "harvest.mean",  "harvest.variance", "harvest.seed",
        "error.kind",     "error.v",       "error.step",     "error.atoms",   "error.probs",    "payoff.kind",
    };
    return keys;
}

class Reader {
public:
    Reader(const std::map<std::string, std::string>& kv, std::string source) : kv_(kv), source_(std::move(source)) {}

    std::string str(const std::string& key, const std::string& fallback) const {
        const auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }
    double num(const std::string& key, double fallback) const {
        const auto it = kv_.find(key);
        return it == kv_.end() ? fallback : text::parse_double(it->second, source_ + ": " + key);
    }
    long integer(const std::string& key, long fallback) const {
        const auto it = kv_.find(key);
        return it == kv_.end() ? fallback : text::parse_long(it->second, source_ + ": " + key);
    }
    std::vector<double> list(const std::string& key) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) throw ConfigError(source_ + ": missing required key '" + key + "'");
        return text::parse_double_list(it->second, source_ + ": " + key);
    }
    [[noreturn]] void bad(const std::string& key, const std::string& value) const {
        throw ConfigError(source_ + ": invalid value '" + value + "' for " + key);
    }

private:
    const std::map<std::string, std::string>& kv_;
    std::string source_;
};

}  // namespace

RunConfig config_from_map(const std::map<std::string, std::string>& kv, const std::string& source) {
    for (const auto& [key, value] : kv) {
        if (!known_keys().count(key)) throw ConfigError(source + ": unknown key '" + key + "'");
    }
    const Reader r(kv, source);
    try {
        RunConfig cfg;
        Scenario& s = cfg.scenario;
        const auto horizon = r.str("horizon", "30");
        if (horizon != "infinite") {
            const long K = r.integer("horizon", 30);
            if (K < 1) r.bad("horizon", horizon);
            s.horizon = static_cast<std::size_t>(K);
        }
        s.gamma = r.num("gamma", 1.0);
        cfg.delta = r.num("delta", 0.1);
        cfg.alpha = r.num("alpha", 1e-4);
        if (kv.count("max_iters")) {
            const long m = r.integer("max_iters", 0);
            if (m < 1) r.bad("max_iters", r.str("max_iters", ""));
            cfg.max_iters = static_cast<std::size_t>(m);
        }
        s.p_max = r.num("p_max", 6.0);
        s.b_max = r.num("b_max", 15.0);
        s.b0 = r.num("b0", 2.0);
        s.slot_length = r.num("slot_length", 1.0);

        const auto ck = r.str("channel.kind", "rayleigh");
        if (ck == "rayleigh") {
            s.channels = {ChannelLaw::rayleigh(r.num("channel.sigma", 1.0))};
        } else if (ck == "exponential") {
            s.channels = {ChannelLaw::exponential(r.num("channel.mean", 1.0))};
        } else if (ck == "discrete") {
            s.channels = {ChannelLaw::discrete(r.list("channel.atoms"), r.list("channel.probs"))};
        } else if (ck == "degenerate") {
            s.channels = {ChannelLaw::degenerate(r.num("channel.h0", 1.0))};
        } else {
            r.bad("channel.kind", ck);
        }

        s.access = AccessChain(r.num("access.q", 0.1), r.num("access.q_tilde", 0.1));
        const auto init = r.str("access.initial", "stationary");
        if (init == "0") {
            s.initial_access = Access::denied;
        } else if (init == "1") {
            s.initial_access = Access::granted;
        } else if (init != "stationary") {
            r.bad("access.initial", init);
        }

        ErrorLaw error = ErrorLaw::none();
        const auto ek = r.str("error.kind", "none");
        if (ek == "uniform") {
            error = ErrorLaw::uniform(r.num("error.v", 0.0), r.num("error.step", 0.1));
        } else if (ek == "discrete") {
            error = ErrorLaw::discrete(r.list("error.atoms"), r.list("error.probs"));
        } else if (ek != "none") {
            r.bad("error.kind", ek);
        }

        std::vector<double> predictions;
        const auto hk = r.str("harvest.kind", "constant");
        if (hk == "constant") {
            predictions = {r.num("harvest.value", 3.0)};
        } else if (hk == "list") {
            predictions = r.list("harvest.values");
        } else if (hk == "truncated_gaussian") {
            if (!s.horizon) throw ConfigError(source + ": truncated_gaussian harvest needs a finite horizon");
            const long seed = r.integer("harvest.seed", 1);
            predictions = truncated_gaussian_predictions(r.num("harvest.mean", 2.0), r.num("harvest.variance", 2.0),
                                                         *s.horizon, static_cast<std::uint64_t>(seed));
        } else {
            r.bad("harvest.kind", hk);
        }
        s.harvest = HarvestSchedule(std::move(predictions), std::move(error));

        const auto pk = r.str("payoff.kind", "log_rate");
        if (pk == "log_rate") {
            s.payoff = PayoffModel::log_rate();
        } else if (pk == "linear") {
            s.payoff = PayoffModel::linear();
        } else {
            r.bad("payoff.kind", pk);
        }
        s.validate();
        if (!(cfg.delta > 0.0)) r.bad("delta", r.str("delta", ""));
        if (!(cfg.alpha > 0.0)) r.bad("alpha", r.str("alpha", ""));
        return cfg;
    } catch (const ContractError& e) {
        throw ConfigError(source + ": " + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(source + ": " + e.what());
    }
}

RunConfig parse_config(std::istream& in, const std::string& source) {
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        const auto t = text::trim(std::string_view(line).substr(0, hash));
        if (t.empty()) continue;
        const auto eq = t.find('=');
        const std::string where = source + ":" + std::to_string(number);
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key(text::trim(t.substr(0, eq)));
        const std::string value(text::trim(t.substr(eq + 1)));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (!kv.emplace(key, value).second) throw ConfigError(where + ": repeated key '" + key + "'");
    }
    return config_from_map(kv, source);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

}  // namespace ehpa
