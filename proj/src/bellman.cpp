#include "ehpa/bellman.hpp"

#include <ostream>

#include "ehpa/text.hpp"

namespace ehpa {

ContinuationProfile make_profile(const PwlValue& next, const ErrorLaw& error, const AccessChain& chain,
                                 Access current) {
    return ContinuationProfile(next, error.atoms(), error.probs(), chain.step_distribution(current));
}

SegmentedDerivative build_future_value(const PwlValue& next, double battery, double harvest, const ErrorLaw& error,
                                       const AccessChain& chain, Access current, double slot_length, double gamma,
                                       double p_max) {
    if (!(battery >= 0.0)) throw DomainError("battery level must be non-negative");
    if (!(p_max > 0.0) || !(slot_length > 0.0)) throw ContractError("empty decision set");
    const auto profile = make_profile(next, error, chain, current);
    return profile.window(battery, harvest, p_max, slot_length, gamma).materialize();
}

double closed_form_allocation(const SegmentedDerivative& d, double h) { return water_fill(d, h); }

namespace {

double granted_value(const ProfileWindow& w, const SlotModel& m, const BackupOptions& opt) {
    if (w.segments() == 0) return w.intercept();
    const PayoffModel& payoff = *m.payoff;
    if (payoff.is_log_rate() && !opt.force_bisection) {
        const auto kinks = channel_breakpoints(w);
        return expected_over_channel(
            [&](double h) {
                const double p = water_fill(w, h);
                return std::log1p(p * h) + w.value(p);
            },
            *m.channel, kinks, opt.quadrature);
    }
    std::vector<double> kinks;
    if (payoff.is_log_rate()) kinks = channel_breakpoints(w);
    return expected_over_channel(
        [&](double h) {
            const double p = bisection_allocation(w, payoff, h);
            return payoff.value(p, h) + w.value(p);
        },
        *m.channel, kinks, opt.quadrature);
}

}  // namespace

BackupResult backup(const PwlValue& next, const SlotModel& m, const BackupOptions& opt) {
    const auto& grid = next.grid();
    if (std::abs(grid.b_max() - m.b_max) > 1e-12 * m.b_max) throw ContractError("backup: grid does not match b_max");
    const auto denied = make_profile(next, *m.error, m.access, Access::denied);
    const auto granted = make_profile(next, *m.error, m.access, Access::granted);
    const std::size_t n = grid.size();
    std::vector<double> v0(n), v1(n);
    const auto count = static_cast<long>(n);
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < count; ++i) {
        try {
            const double b = grid.point(static_cast<std::size_t>(i));
            v0[i] = denied.window(b, m.prediction, m.p_max, m.slot_length, m.gamma).intercept();
            v1[i] = granted_value(granted.window(b, m.prediction, m.p_max, m.slot_length, m.gamma), m, opt);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    PwlValue value(grid, std::move(v0), std::move(v1));
    const double bound = approximation_error_bound(value);
    return {std::move(value), bound};
}

double approximation_error_bound(const PwlValue& v) {
    if (v.grid().size() < 3) throw ContractError("error bound needs at least three grid points");
    double bound = 0.0;
    for (Access a : {Access::denied, Access::granted}) {
        const auto s = v.samples(a);
        bound = std::max(bound, 2.0 * s[1] - s[2] - s[0]);
    }
    return bound;
}

double accumulated_error_bound(std::span<const double> per_iteration, double gamma) {
    double acc = 0.0;
    for (double e : per_iteration) {
        if (!(e >= 0.0)) throw ContractError("per-iteration error bounds must be non-negative");
        acc = acc * gamma + e;
    }
    return acc;
}

void dump_staircases(std::ostream& out, const PwlValue& next, const SlotModel& m) {
    out << "b\tA\tsegment\tp_left\tp_right\tslope\n";
    for (Access a : {Access::denied, Access::granted}) {
        const auto profile = make_profile(next, *m.error, m.access, a);
        for (std::size_t i = 0; i < next.grid().size(); ++i) {
            const double b = next.grid().point(i);
            const auto d = profile.window(b, m.prediction, m.p_max, m.slot_length, m.gamma).materialize();
            for (std::size_t s = 0; s < d.segments(); ++s) {
                out << text::format_double(b) << '\t' << index_of(a) << '\t' << s << '\t'
                    << text::format_double(d.breakpoints[s]) << '\t' << text::format_double(d.breakpoints[s + 1])
                    << '\t' << text::format_double(d.slopes[s]) << '\n';
            }
        }
    }
}

}  // namespace ehpa
