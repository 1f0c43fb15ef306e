#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ehpa/baselines.hpp"
#include "ehpa/errors.hpp"
#include "ehpa/experiments.hpp"
#include "ehpa/planner.hpp"
#include "ehpa/sim.hpp"
#include "support.hpp"

using namespace ehpa;

namespace {

struct ZeroPolicy final : Policy {
    std::string name() const override { return "zero"; }
    double power(const Observation&) const override { return 0.0; }
};

struct Overspend final : Policy {
    std::string name() const override { return "overspend"; }
    double power(const Observation& obs) const override { return obs.k == 3 ? obs.b + 1.0 : 0.0; }
};

struct IgnoresAccess final : Policy {
    std::string name() const override { return "ignores-access"; }
    double power(const Observation& obs) const override { return std::min(obs.b, 0.5); }
};

}  // namespace

TEST_CASE("zero policy earns nothing and the battery saturates") {
    const auto s = finite_scenario(2.0, 1.0);
    const auto t = run_trial(ZeroPolicy{}, s, 3, *s.horizon);
    CHECK(t.total == 0.0);
    CHECK(t.slots.back().b == s.b_max);
}

TEST_CASE("single greedy slot") {
    const auto s = testing::deterministic_scenario({0.9}, {3.0}, 2.0, 6.0, 15.0);
    const auto t = run_trial(GreedyPolicy(s), s, 1, 1);
    CHECK(t.total == doctest::Approx(std::log1p(2.0 * 0.9)).epsilon(1e-15));
}

TEST_CASE("energy is conserved on every trial") {
    auto s = finite_scenario(2.0, 1.0);
    s.harvest = HarvestSchedule(std::vector<double>(s.harvest.predictions().begin(), s.harvest.predictions().end()),
                                ErrorLaw::uniform(0.1, 0.1));
    const GreedyPolicy greedy(s);
    for (std::uint64_t seed = 1; seed <= 10000; ++seed) {
        const auto t = run_trial(greedy, s, seed, *s.horizon);
        double b = s.b0;
        bool ok = true;
        for (std::size_t k = 0; k < t.slots.size(); ++k) {
            const auto& r = t.slots[k];
            ok = ok && std::abs(r.b - b) <= 1e-12 && r.power * s.slot_length <= r.b + 1e-12;
            b = std::max(0.0, std::min(s.b_max, r.b - r.power * s.slot_length + s.prediction(k) + r.error));
        }
        if (!ok) {
            FAIL("energy audit failed at seed " << seed);
            break;
        }
    }
}

TEST_CASE("infeasible actions are hard errors naming the policy and slot") {
    const auto s = finite_scenario(2.0, 1.0);
    try {
        run_trial(Overspend{}, s, 1, *s.horizon);
        FAIL("expected ContractError");
    } catch (const ContractError& e) {
        const std::string what = e.what();
        CHECK(what.find("overspend") != std::string::npos);
        CHECK(what.find("3") != std::string::npos);
    }
    auto denied = s;
    denied.access = AccessChain(1.0, 1.0);
    denied.initial_access = Access::denied;
    CHECK_THROWS_AS(run_trial(IgnoresAccess{}, denied, 1, 5), ContractError);
}

TEST_CASE("deterministic scenarios have zero standard error") {
    const auto s = testing::deterministic_scenario({1.0, 0.5, 2.0}, {1.0, 2.0, 0.0}, 2.0, 6.0, 15.0);
    const auto e = evaluate(GreedyPolicy(s), s, 100, 1);
    CHECK(e.stderr_ == 0.0);
}

TEST_CASE("evaluation is reproducible and uses shared seeds") {
    const auto s = finite_scenario(2.0, 1.0);
    const GreedyPolicy greedy(s);
    const auto a = evaluate(greedy, s, 2000, 5);
    const auto b = evaluate(greedy, s, 2000, 5);
    CHECK(a.totals == b.totals);
    CHECK(a.mean == b.mean);
    CHECK(a.stderr_ == b.stderr_);
    CHECK(a.totals[10] == run_trial(greedy, s, 15, *s.horizon).total);
    const auto d = paired_difference(a, b);
    CHECK(d.mean == 0.0);
    CHECK(d.stderr_ == 0.0);
    CHECK_THROWS_AS(summarize("x", {1.0}), ContractError);
}

TEST_CASE("doubling the trials shrinks the standard error by about 1/sqrt(2)") {
    const auto s = finite_scenario(2.0, 1.0);
    const BalancedPolicy balanced(s);
    const auto small = evaluate(balanced, s, 5000, 1);
    const auto large = evaluate(balanced, s, 10000, 1);
    const double ratio = large.stderr_ / small.stderr_;
    CHECK(ratio == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.2));
}

TEST_CASE("proposed policy beats greedy on the energy-constrained setting") {
    const auto s = finite_scenario(2.0, 1.0);
    PlannerOptions opt;
    opt.delta = 1.0;
    const auto t = plan_finite(s, opt);
    const auto p = evaluate(Allocator(t, s), s, 10000, 1);
    const auto g = evaluate(GreedyPolicy(s), s, 10000, 1);
    const auto d = paired_difference(p, g);
    CHECK(p.mean > g.mean);
    CHECK(d.mean > 3.0 * d.stderr_);
}

TEST_CASE("infinite-horizon evaluation length") {
    const auto s = infinite_scenario(1.0, 0.85);
    CHECK(evaluation_horizon(s) == 86);
    CHECK(evaluation_horizon(finite_scenario(2.0, 1.0)) == 30);
    const auto t = run_trial(GreedyPolicy(s), s, 2, evaluation_horizon(s));
    double total = 0.0, weight = 1.0;
    for (const auto& r : t.slots) {
        total += weight * r.payoff;
        weight *= s.gamma;
    }
    CHECK(t.total == doctest::Approx(total).epsilon(1e-14));
}

TEST_CASE("csv rows") {
    std::ostringstream out;
    write_csv_header(out);
    write_csv_row(out, {"sigma=1", "greedy", 1.5, 0.25, 100, std::nullopt});
    write_csv_row(out, {"sigma=1", "proposed(delta=1)", 2.0, 0.5, 100, 2.125});
    CHECK(out.str() ==
          "sweep,policy,mean,stderr,trials,upper_bound\n"
          "sigma=1,greedy,1.5,0.25,100,\n"
          "sigma=1,proposed(delta=1),2,0.5,100,2.125\n");
}
