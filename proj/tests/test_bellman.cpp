#include <doctest.h>

#include <cmath>
#include <vector>

#include "ehpa/bellman.hpp"
#include "ehpa/errors.hpp"
#include "support.hpp"

using namespace ehpa;
using testing::uniform;

namespace {

double direct_future(const PwlValue& w, double battery, double harvest, double p, const ErrorLaw& err,
                     const AccessChain& chain, Access a, double slot_length, double gamma) {
    const auto next = access_step_distribution(chain, a);
    double sum = 0.0;
    for (Access n : {Access::denied, Access::granted}) {
        for (std::size_t j = 0; j < err.atoms().size(); ++j) {
            const double x = std::min(w.grid().b_max(), battery + harvest + err.atoms()[j] - p * slot_length);
            sum += next[index_of(n)] * err.probs()[j] * w(std::max(0.0, x), n);
        }
    }
    return gamma * sum;
}

Scenario small_scenario(double gamma, const ChannelLaw& law) {
    Scenario s;
    s.channels = {law};
    s.horizon = 4;
    s.gamma = gamma;
    s.b_max = 8.0;
    s.p_max = 4.0;
    s.harvest = HarvestSchedule({1.5}, ErrorLaw::uniform(0.5, 0.25));
    return s;
}

}  // namespace

TEST_CASE("future value of a zero continuation is flat") {
    const BatteryGrid grid(10.0, 1.0);
    const auto d = build_future_value(PwlValue::zero(grid), 6.0, 2.0, ErrorLaw::none(), AccessChain(0.1, 0.1),
                                      Access::granted, 1.0, 0.9, 6.0);
    REQUIRE(d.segments() == 1);
    CHECK(d.slopes[0] == 0.0);
    CHECK(d.upper() == 6.0);
    CHECK(d.intercept == 0.0);
}

TEST_CASE("linear continuation gives a single segment of slope -gamma T_c s") {
    const BatteryGrid grid(20.0, 1.0);
    const double s = 0.3;
    std::vector<double> lin(grid.size());
    for (std::size_t i = 0; i < lin.size(); ++i) lin[i] = 1.0 + s * grid.point(i);
    const PwlValue w(grid, lin, lin);
    const auto d = build_future_value(w, 7.0, 3.0, ErrorLaw::none(), AccessChain(0.2, 0.4), Access::granted, 1.0,
                                      0.8, 6.0);
    REQUIRE(d.segments() == 1);
    CHECK(d.slopes[0] == doctest::Approx(-0.8 * s).epsilon(1e-12));
    CHECK(d.upper() == 6.0);
}

TEST_CASE("future value staircase agrees with direct evaluation") {
    Rng rng(3);
    const BatteryGrid grid(10.0, 1.0);
    const std::vector<ErrorLaw> errors{ErrorLaw::none(), ErrorLaw::uniform(1.0, 0.5),
                                       ErrorLaw::discrete({-0.3, 0.0, 0.7}, {0.2, 0.5, 0.3})};
    for (int rep = 0; rep < 30; ++rep) {
        const auto w = testing::random_concave(grid, rng);
        const auto& err = errors[rep % errors.size()];
        const AccessChain chain(uniform(rng, 0, 1), uniform(rng, 0, 1));
        const Access a = rep % 2 ? Access::granted : Access::denied;
        const double battery = static_cast<double>(rng.uniform() < 0.5 ? 7 : 3);
        const double harvest = 3.0;
        const double slot = rep % 3 == 0 ? 0.5 : 1.0;
        const double gamma = uniform(rng, 0.1, 1.0);
        const auto d = build_future_value(w, battery, harvest, err, chain, a, slot, gamma, 6.0);
        for (std::size_t i = 1; i < d.segments(); ++i) CHECK(d.slopes[i] <= d.slopes[i - 1]);
        for (double slope : d.slopes) CHECK(slope <= 0.0);
        CHECK(d.upper() == doctest::Approx(std::min(6.0, battery / slot)));
        for (int t = 0; t < 200; ++t) {
            const double p = d.upper() * rng.uniform();
            CHECK(std::abs(d.value(p) - direct_future(w, battery, harvest, p, err, chain, a, slot, gamma)) <= 1e-12);
        }
    }
}

TEST_CASE("zero battery leaves only p = 0") {
    const BatteryGrid grid(10.0, 1.0);
    const auto d = build_future_value(PwlValue::zero(grid), 0.0, 2.0, ErrorLaw::none(), AccessChain(0.1, 0.1),
                                      Access::granted, 1.0, 0.9, 6.0);
    CHECK(d.segments() == 0);
    CHECK(closed_form_allocation(d, 2.0) == 0.0);
}

TEST_CASE("closed-form allocation examples") {
    SegmentedDerivative flat{{0.0, 4.0}, {0.0}, 0.0};
    CHECK(closed_form_allocation(flat, 1.0) == 4.0);
    SegmentedDerivative one{{0.0, 6.0}, {-0.5}, 0.0};
    CHECK(closed_form_allocation(one, 1.0) == doctest::Approx(1.0));
    CHECK(closed_form_allocation(one, 0.0) == 0.0);
    CHECK_THROWS_AS(closed_form_allocation(one, -1.0), DomainError);
    CHECK(closed_form_allocation(one, 1.5) == doctest::Approx(2.0 - 1.0 / 1.5));
    // weak channel below the first threshold 1/(1/0.5 - 0) = 0.5
    CHECK(closed_form_allocation(one, 0.4) == 0.0);
}

TEST_CASE("closed form beats a dense power grid and is monotone in h") {
    Rng rng(8);
    for (int rep = 0; rep < 300; ++rep) {
        const auto d = testing::random_staircase(rng, 1 + rep % 7);
        const double h = -std::log(1.0 - rng.uniform()) * 2.0;
        const double p = closed_form_allocation(d, h);
        CHECK(p >= 0.0);
        CHECK(p <= d.upper());
        CHECK(testing::objective(d, p, h) >= testing::grid_max(d, h, 20001) - 1e-9);
        CHECK(closed_form_allocation(d, 1.3 * h) >= p - 1e-12);
    }
}

TEST_CASE("channel breakpoints separate the regimes") {
    SegmentedDerivative d{{0.0, 1.0, 3.0}, {-0.5, -1.0}, 0.0};
    const auto t = channel_breakpoints(d);
    // regime thresholds: 1/(2-0)=0.5, 1/(2-1)=1, 1/(1-1) dropped, 1/(1-3) dropped
    REQUIRE(t.size() == 2);
    CHECK(t[0] == doctest::Approx(0.5));
    CHECK(t[1] == doctest::Approx(1.0));
    CHECK(closed_form_allocation(d, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(closed_form_allocation(d, 1.0) == doctest::Approx(1.0));
    CHECK(closed_form_allocation(d, 5.0) == doctest::Approx(1.0));
}

TEST_CASE("bisection matches the closed form for the log rate") {
    Rng rng(9);
    const auto lr = PayoffModel::log_rate();
    for (int rep = 0; rep < 1000; ++rep) {
        const auto d = testing::random_staircase(rng, 1 + rep % 6);
        const double h = uniform(rng, 0.01, 5.0);
        CHECK(std::abs(bisection_allocation(d, lr, h) - closed_form_allocation(d, h)) <= 1e-8);
    }
}

TEST_CASE("bisection with generic payoffs") {
    const auto linear = PayoffModel::linear();
    SegmentedDerivative flat{{0.0, 3.0}, {0.0}, 0.0};
    CHECK(bisection_allocation(flat, linear, 1.0) == 3.0);
    SegmentedDerivative steep{{0.0, 3.0}, {-2.0}, 0.0};
    CHECK(bisection_allocation(steep, linear, 1.0) == 0.0);
    SegmentedDerivative mixed{{0.0, 1.0, 3.0}, {-0.5, -2.0}, 0.0};
    CHECK(bisection_allocation(mixed, linear, 1.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(bisection_allocation(mixed, linear, -1.0), DomainError);
    SegmentedDerivative convex{{0.0, 1.5, 3.0}, {-1.5, -0.5}, 0.0};
    CHECK_THROWS_AS(bisection_allocation(convex, PayoffModel::log_rate(), 2.0), ContractError);
}

TEST_CASE("backup examples") {
    auto s = small_scenario(0.9, ChannelLaw::rayleigh(1.0));
    s.harvest = HarvestSchedule({1.5}, ErrorLaw::none());
    s.p_max = 6.0;
    const auto m = slot_model(s, 3);
    const auto r = backup(PwlValue::zero(BatteryGrid(s.b_max, 1.0)), m);
    const auto& grid = r.value.grid();
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(r.value.samples(Access::denied)[i] == 0.0);
    const double full = expected_over_channel([](double h) { return std::log1p(6.0 * h); }, *m.channel, {});
    for (std::size_t i = 6; i < grid.size(); ++i) {
        CHECK(r.value.samples(Access::granted)[i] == doctest::Approx(full).epsilon(1e-9));
    }
    CHECK(r.error_bound >= 0.0);
}

TEST_CASE("backup preserves shape and contracts") {
    Rng rng(21);
    for (int rep = 0; rep < 12; ++rep) {
        const double gamma = uniform(rng, 0.0, 0.99);
        const auto law = rep % 3 == 0 ? ChannelLaw::discrete({0.2, 1.0, 2.5}, {0.3, 0.4, 0.3})
                                      : ChannelLaw::rayleigh(uniform(rng, 0.5, 1.5));
        auto s = small_scenario(gamma, law);
        s.access = AccessChain(uniform(rng, 0, 1), uniform(rng, 0, 1));
        const auto m = slot_model(s, 1);
        const BatteryGrid grid(s.b_max, 0.5);
        const auto v1 = testing::random_concave(grid, rng, 2.0);
        const auto v2 = testing::random_concave(grid, rng, 2.0);
        BackupOptions opt;
        opt.force_bisection = rep % 2 == 1;
        const auto t1 = backup(v1, m, opt);
        const auto t2 = backup(v2, m, opt);
        CHECK(pwl::shape_check(t1.value, 1e-9).passed);
        CHECK(pwl::shape_check(t2.value, 1e-9).passed);
        CHECK(pwl::sup_distance(t1.value, t2.value) <= gamma * pwl::sup_distance(v1, v2) + 1e-9);
    }
}

TEST_CASE("forced bisection reproduces the closed-form backup") {
    const auto s = small_scenario(0.8, ChannelLaw::rayleigh(1.0));
    const auto m = slot_model(s, 1);
    Rng rng(4);
    const auto v = testing::random_concave(BatteryGrid(s.b_max, 0.5), rng);
    BackupOptions forced;
    forced.force_bisection = true;
    CHECK(pwl::sup_distance(backup(v, m).value, backup(v, m, forced).value) <= 1e-7);
}

TEST_CASE("non-finite continuation values are a numeric error") {
    const auto s = small_scenario(0.8, ChannelLaw::rayleigh(1.0));
    const BatteryGrid grid(s.b_max, 1.0);
    std::vector<double> bad(grid.size(), 0.0);
    bad[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(backup(PwlValue(grid, bad, bad), slot_model(s, 1)), NumericError);
}

TEST_CASE("approximation error bound") {
    const BatteryGrid grid(4.0, 1.0);
    CHECK(approximation_error_bound(PwlValue(grid, {0, 1, 2, 3, 4}, {1, 1.5, 2, 2.5, 3})) == 0.0);
    CHECK(approximation_error_bound(PwlValue(grid, {0, 1, 1.5, 1.75, 1.8}, {0, 0, 0, 0, 0})) ==
          doctest::Approx(0.5));
    CHECK_THROWS_AS(approximation_error_bound(PwlValue::zero(BatteryGrid(1.0, 1.0))), ContractError);

    SUBCASE("dominates the dense interpolation error of concave functions") {
        Rng rng(13);
        for (int rep = 0; rep < 50; ++rep) {
            const double a = uniform(rng, 0.1, 3.0), c = uniform(rng, 0.2, 2.0);
            const double delta = rep % 2 ? 0.5 : 1.0;
            const BatteryGrid g(8.0, delta);
            auto fn = [&](double b, int branch) { return (branch ? 1.0 : 0.5) * c * std::log1p(a * b); };
            std::vector<double> s0(g.size()), s1(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) {
                s0[i] = fn(g.point(i), 0);
                s1[i] = fn(g.point(i), 1);
            }
            const PwlValue v(g, s0, s1);
            double worst = 0.0;
            for (int i = 0; i <= 8000; ++i) {
                const double b = i * 1e-3;
                worst = std::max({worst, fn(b, 0) - v(b, Access::denied), fn(b, 1) - v(b, Access::granted)});
            }
            CHECK(approximation_error_bound(v) >= worst - 1e-12);
        }
    }
}

TEST_CASE("accumulated error bound") {
    const std::vector<double> one{0.2}, two{0.2, 0.2}, many(7, 0.01);
    CHECK(accumulated_error_bound(one, 0.3) == doctest::Approx(0.2));
    CHECK(accumulated_error_bound(two, 0.5) == doctest::Approx(0.3));
    CHECK(accumulated_error_bound(many, 1.0) == doctest::Approx(0.07));
}
