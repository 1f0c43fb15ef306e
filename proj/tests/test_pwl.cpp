#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "ehpa/errors.hpp"
#include "ehpa/pwl.hpp"
#include "support.hpp"

using namespace ehpa;

namespace {

PwlValue three_point() { return PwlValue(BatteryGrid(2.0, 1.0), {0.0, 0.5, 0.75}, {0.0, 1.0, 1.5}); }

}  // namespace

TEST_CASE("eval interpolates, is exact at grid points and clamps above b_max") {
    const auto f = three_point();
    CHECK(pwl::eval(f, 0.5, Access::granted) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(pwl::eval(f, 2.0, Access::granted) == 1.5);
    CHECK(pwl::eval(f, 7.3, Access::granted) == 1.5);
    CHECK(pwl::eval(f, 1.0, Access::denied) == 0.5);
    CHECK_THROWS_AS(pwl::eval(f, -0.1, Access::granted), DomainError);
    CHECK_THROWS_AS(pwl::eval(f, std::nan(""), Access::granted), DomainError);
    CHECK_THROWS_AS(access_from_int(2), DomainError);
    CHECK(access_from_int(0) == Access::denied);
}

TEST_CASE("grid requires b_max to be a multiple of delta") {
    CHECK_THROWS_AS(BatteryGrid(15.0, 0.4), ContractError);
    const BatteryGrid g(15.0, 0.1);
    CHECK(g.size() == 151);
    CHECK(g.point(150) == 15.0);
    CHECK(g.floor_index(0.35) == 3);
    CHECK(g.nearest_index(0.36) == 4);
    CHECK(g.floor_index(99.0) == 150);
}

TEST_CASE("sup_distance") {
    const auto f = three_point();
    CHECK(pwl::sup_distance(f, f) == 0.0);
    const PwlValue g(f.grid(), {0.0, 0.5, 0.75}, {0.0, 1.25, 1.5});
    CHECK(pwl::sup_distance(f, g) == doctest::Approx(0.25));
    CHECK_THROWS_AS(pwl::sup_distance(f, PwlValue::zero(BatteryGrid(4.0, 1.0))), ContractError);

    SUBCASE("matches a dense evaluation on random pairs") {
        Rng rng(11);
        const BatteryGrid grid(15.0, 1.0);
        for (int rep = 0; rep < 20; ++rep) {
            const auto a = testing::random_concave(grid, rng);
            const auto b = testing::random_concave(grid, rng);
            double dense = 0.0;
            for (int i = 0; i <= 9990; ++i) {
                const double x = 15.0 * i / 9990.0;
                for (Access s : {Access::denied, Access::granted}) dense = std::max(dense, std::abs(a(x, s) - b(x, s)));
            }
            CHECK(std::abs(pwl::sup_distance(a, b) - dense) <= 1e-12);
        }
    }
}

TEST_CASE("shape_check") {
    auto report = pwl::shape_check(three_point(), 0.0);
    CHECK(report.passed);
    const PwlValue convex(BatteryGrid(2.0, 1.0), {0.0, 1.0, 3.0}, {0.0, 1.0, 1.5});
    report = pwl::shape_check(convex, 1e-9);
    CHECK_FALSE(report.passed);
    CHECK(report.convexity[0] == doctest::Approx(1.0));
    const PwlValue falling(BatteryGrid(2.0, 1.0), {0.0, 1.0, 1.5}, {0.0, 1.0, 0.7});
    report = pwl::shape_check(falling, 1e-9);
    CHECK_FALSE(report.passed);
    CHECK(report.monotonicity[1] == doctest::Approx(0.3));
}

TEST_CASE("interpolated random concave samples stay concave between grid points") {
    Rng rng(5);
    const BatteryGrid grid(6.0, 0.5);
    const auto f = testing::random_concave(grid, rng);
    for (int i = 1; i + 1 < 600; ++i) {
        const double x0 = (i - 1) * 0.01, x1 = i * 0.01, x2 = (i + 1) * 0.01;
        CHECK(f(x1, Access::granted) + 1e-12 >= 0.5 * (f(x0, Access::granted) + f(x2, Access::granted)));
    }
}

TEST_CASE("table write/read round trip is bit-exact") {
    Rng rng(7);
    const auto f = testing::random_concave(BatteryGrid(15.0, 0.1), rng);
    std::stringstream io;
    pwl::write_table(io, f);
    const auto g = pwl::read_table(io);
    REQUIRE(g.grid() == f.grid());
    for (Access a : {Access::denied, Access::granted}) {
        for (std::size_t i = 0; i < f.grid().size(); ++i) CHECK(g.samples(a)[i] == f.samples(a)[i]);
    }
    std::stringstream bad("b\tA0\n0\t1\n");
    CHECK_THROWS_AS(pwl::read_table(bad), ConfigError);
    std::stringstream junk("b\tA0\tA1\n0\t1\tx\n");
    CHECK_THROWS_AS(pwl::read_table(junk), ConfigError);
}
