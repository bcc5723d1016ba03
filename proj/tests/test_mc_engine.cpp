#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "weakboost/rng.hpp"
#include "weakboost/stats.hpp"

using namespace wb;

TEST_SUITE("mc_engine") {

TEST_CASE("philox4x32-10 known answers") {
    using A4 = std::array<uint32_t, 4>;
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are addressed by (seed, stream, index)") {
    Rng a(7, 1, 42), b(7, 1, 42), c(7, 2, 42), d(8, 1, 42);
    uint64_t va = a(), vb = b();
    CHECK(va == vb);
    CHECK(va != c());
    CHECK(va != d());
    Rng u(3, 0, 0);
    for (int i = 0; i < 10000; ++i) {
        double x = u.uniform();
        REQUIRE(x > 0.0);
        REQUIRE(x < 1.0);
    }
}

TEST_CASE("uniform and normal draws have the right first moments") {
    Accumulator un, nm, n2;
    for (uint64_t i = 0; i < 200000; ++i) {
        Rng r(11, 0, i);
        un.add(r.uniform());
        double g = r.normal();
        nm.add(g);
        n2.add(g * g);
    }
    CHECK(un.mean() == doctest::Approx(0.5).epsilon(0.005));
    CHECK(std::fabs(nm.mean()) < 4.0 * std::sqrt(1.0 / 200000));
    CHECK(n2.mean() == doctest::Approx(1.0).epsilon(0.015));
}

TEST_CASE("below() covers its range uniformly") {
    std::array<int, 5> hits{};
    Rng r(5, 0, 0);
    for (int i = 0; i < 50000; ++i) hits[r.below(5)]++;
    for (int h : hits) CHECK(std::abs(h - 10000) < 500);
}

TEST_CASE("accumulator merge equals sequential accumulation") {
    Accumulator all, left, right;
    Rng r(1, 0, 0);
    for (int i = 0; i < 1000; ++i) {
        double x = r.normal() * 3.0 + 1.0;
        all.add(x);
        (i < 377 ? left : right).add(x);
    }
    left.merge(right);
    CHECK(left.count() == all.count());
    CHECK(left.mean() == doctest::Approx(all.mean()).epsilon(1e-12));
    CHECK(left.variance() == doctest::Approx(all.variance()).epsilon(1e-12));

    Accumulator empty;
    empty.merge(all);
    CHECK(empty.mean() == all.mean());
    auto m = Accumulator::from_moments(10, 2.0, 4.0);
    CHECK(m.variance() == doctest::Approx(4.0));
}

TEST_CASE("pair accumulator covariance") {
    PairAccumulator p, q;
    for (int i = 0; i < 100; ++i) {
        double x = i, y = 2.0 * i + 1.0;
        (i % 2 ? p : q).add(x, y);
    }
    p.merge(q);
    CHECK(p.cov() == doctest::Approx(2.0 * p.var_x()));
    CHECK(p.var_y() == doctest::Approx(4.0 * p.var_x()));
}

TEST_CASE("run_estimate: constant payoff") {
    Estimate e = run_estimate([](Rng&, uint64_t) { return 3.5; }, 1000, 1);
    CHECK(e.value == 3.5);
    CHECK(e.variance == 0.0);
    CHECK(e.n_samples == 1000);
    CHECK(e.half_width_95 == 0.0);
}

TEST_CASE("run_estimate: Bernoulli(1/2) variance") {
    Estimate e = run_estimate([](Rng& r, uint64_t) { return r.bernoulli() ? 1.0 : 0.0; }, 1'000'000, 9);
    CHECK(std::fabs(e.variance - 0.25) <= 0.002);
    CHECK(std::fabs(e.value - 0.5) <= 4.0 * 0.5 / 1000.0);
}

TEST_CASE("run_estimate is independent of the worker count") {
    auto task = [](Rng& r, uint64_t) { return std::exp(r.normal()); };
    Estimate one = run_estimate(task, 100000, 4, 3, 1);
    Estimate four = run_estimate(task, 100000, 4, 3, 4);
    CHECK(one.value == four.value);
    CHECK(one.variance == four.variance);
}

TEST_CASE("run_estimate reports the index of a non-finite sample") {
    auto task = [](Rng&, uint64_t i) { return i == 777 ? std::nan("") : 1.0; };
    try {
        run_estimate(task, 5000, 1);
        FAIL("expected NonFiniteSample");
    } catch (const NonFiniteSample& e) {
        CHECK(e.index == 777);
    }
    CHECK_THROWS_AS(run_estimate(task, 5000, 1, 0, 3), NonFiniteSample);
    CHECK_THROWS_AS(run_estimate(task, 1, 1), std::invalid_argument);
}

TEST_CASE("regress_slope") {
    std::vector<std::pair<double, double>> e2, e4;
    for (int n : {1, 2, 4, 8, 16}) {
        e2.emplace_back(n, 3.0 / (n * n));
        e4.emplace_back(n, 0.5 / std::pow(n, 4));
    }
    CHECK(regress_slope(e2).slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(regress_slope(e4).slope == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(regress_slope({{2, 1.0}, {4, 0.25}}).slope == doctest::Approx(2.0).epsilon(1e-12));
    SlopeFit f = regress_slope({{1, 1.0}, {2, 0.0}, {4, 1.0 / 16}, {8, -1.0}});
    CHECK(f.dropped == 2);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK_THROWS_AS(regress_slope({{2, 1.0}}), std::invalid_argument);
}

}
