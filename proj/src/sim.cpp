#include "ehpa/sim.hpp"

#include <cmath>
#include <exception>
#include <ostream>

#include "ehpa/errors.hpp"
#include "ehpa/text.hpp"

namespace ehpa {

using text::format_double;

std::size_t evaluation_horizon(const Scenario& s) {
    if (s.finite()) return *s.horizon;
    if (s.gamma <= 0.0) return 1;
    return static_cast<std::size_t>(std::ceil(std::log(1e-6) / std::log(s.gamma)));
}

TrialRecord run_trial(const Policy& policy, const Scenario& s, const Realization& r, std::uint64_t seed) {
    const std::size_t n = r.h.size();
    TrialRecord rec;
    rec.seed = seed;
    rec.slots.reserve(n);
    double b = s.b0;
    double discount = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        const Observation obs{b, r.h[k], r.access[k], k + 1};
        const double p = policy.power(obs);
        auto fail = [&](const std::string& why) {
            throw ContractError("policy '" + policy.name() + "' chose infeasible power " + format_double(p) +
                                " in slot " + std::to_string(k + 1) + " (b = " + format_double(b) + "): " + why);
        };
        if (!std::isfinite(p) || p < 0.0) fail("power must be finite and non-negative");
        if (p > s.p_max) fail("exceeds p_max");
        if (p * s.slot_length > b * (1.0 + 1e-12) + 1e-15) fail("exceeds the stored energy");
        if (r.access[k] == Access::denied && p > 0.0) fail("access denied");
        const double payoff = r.access[k] == Access::granted ? s.payoff.value(p, r.h[k]) : 0.0;
        rec.slots.push_back({b, r.h[k], r.access[k], r.error[k], p, payoff});
        rec.total += discount * payoff;
        discount *= s.gamma;
        b = std::min(s.b_max, b + s.prediction(s.finite() ? k : 0) + r.error[k] - p * s.slot_length);
        if (b < 0.0) {
            if (b < -1e-12) fail("battery would become negative");
            b = 0.0;
        }
    }
    return rec;
}

TrialRecord run_trial(const Policy& policy, const Scenario& s, std::uint64_t seed, std::size_t horizon) {
    return run_trial(policy, s, sample_trajectory(s, seed, horizon), seed);
}

EvalSummary summarize(std::string policy, std::vector<double> totals) {
    if (totals.size() < 2) throw ContractError("need at least two trials");
    EvalSummary out;
    out.policy = std::move(policy);
    out.trials = totals.size();
    // shifted by the first total so identical totals give exactly zero spread
    const double shift = totals.front();
    double sum = 0.0;
    for (double t : totals) sum += t - shift;
    const double centred = sum / static_cast<double>(totals.size());
    out.mean = shift + centred;
    double ss = 0.0;
    for (double t : totals) ss += (t - shift - centred) * (t - shift - centred);
    out.stderr_ = std::sqrt(ss / static_cast<double>(totals.size() - 1) / static_cast<double>(totals.size()));
    out.totals = std::move(totals);
    return out;
}

EvalSummary evaluate(const Policy& policy, const Scenario& s, std::size_t trials, std::uint64_t base_seed) {
    if (trials < 2) throw ContractError("need at least two trials");
    const std::size_t horizon = evaluation_horizon(s);
    std::vector<double> totals(trials);
    std::exception_ptr failure;
    const auto count = static_cast<long>(trials);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < count; ++i) {
        try {
            totals[i] = run_trial(policy, s, base_seed + static_cast<std::uint64_t>(i), horizon).total;
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return summarize(policy.name(), std::move(totals));
}

PairedDifference paired_difference(const EvalSummary& a, const EvalSummary& b) {
    if (a.totals.size() != b.totals.size()) throw ContractError("paired comparison needs equal trial counts");
    std::vector<double> d(a.totals.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.totals[i] - b.totals[i];
    const auto s = summarize("difference", std::move(d));
    return {s.mean, s.stderr_};
}

void write_csv_header(std::ostream& out) { out << "sweep,policy,mean,stderr,trials,upper_bound\n"; }

void write_csv_row(std::ostream& out, const CsvRow& row) {
    out << row.sweep << ',' << row.policy << ',' << format_double(row.mean) << ',' << format_double(row.stderr_) << ','
        << row.trials << ',';
    if (row.upper_bound) out << format_double(*row.upper_bound);
    out << '\n';
}

}  // namespace ehpa
