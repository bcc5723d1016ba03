#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "weakboost/heston.hpp"
#include "weakboost/schemes.hpp"

using namespace wb;

namespace {

HestonParams params(double rho = -0.7, double sigma = 0.5) {
    HestonParams p;
    p.r = 0.02;
    p.rho = rho;
    p.cir = CirParams{0.2, 1.0, sigma, 0.2};
    p.x0 = std::log(100.0);
    return p;
}

}  // namespace

TEST_SUITE("heston_schemes") {

TEST_CASE("x increment: identity at t = 0 and degenerate correlation") {
    HestonParams p = params();
    LogHestonState s{4.6, 0.2, 0.0};
    LogHestonState o = ex_step(s, 0.0, 1.3, 0.2, p);
    CHECK(o.x == s.x);
    CHECK(o.y == s.y);
    HestonParams q = params(1.0);
    XIncrement inc = x_increment(0.2, 0.3, 0.5, q);
    CHECK(inc.var == 0.0);
    CHECK(ex_step(s, 0.5, -2.0, 0.3, q).x == ex_step(s, 0.5, 2.0, 0.3, q).x);
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
}

TEST_CASE("x increment with rho = 0 is the trapezoid Gaussian") {
    HestonParams p = params(0.0);
    XIncrement inc = x_increment(0.2, 0.3, 0.5, p);
    CHECK(inc.var == doctest::Approx(0.25 * 0.5));
    CHECK(inc.drift == doctest::Approx((0.02 - 0.5 * 0.25) * 0.5));
}

TEST_CASE("nv_step: identity at t = 0, small sigma makes y deterministic") {
    HestonParams p = params();
    LogHestonState s{4.6, 0.2, 0.0};
    LogHestonState o = nv_step(s, 0.0, 0.5, 0.5, p);
    CHECK(o.x == doctest::Approx(s.x));
    CHECK(o.y == doctest::Approx(s.y));
    HestonParams q = params(0.0, 1e-9);
    double y1 = nv_step(s, 0.1, 0.0, 2.0, q).y;
    double y2 = nv_step(s, 0.1, 0.0, -2.0, q).y;
    CHECK(y1 == doctest::Approx(y2).epsilon(1e-8));
}

TEST_CASE("bernoulli_step") {
    HestonParams p = params();
    LogHestonState s{4.6, 0.2, 0.0};
    // B = 0 with y_next = y: radicand is the start variance
    LogHestonState o = bernoulli_step(s, 0.5, 1.0, false, 0.2, p);
    XIncrement inc = x_increment(0.2, 0.2, 0.5, p);
    CHECK(o.x == doctest::Approx(s.x + inc.drift + std::sqrt((1 - 0.49) * 0.2 * 0.5)));
    LogHestonState z = bernoulli_step(s, 0.0, 1.0, true, 0.2, p);
    CHECK(z.x == doctest::Approx(s.x));
    // B = 1 uses the end variance
    LogHestonState e = bernoulli_step(s, 0.5, 1.0, true, 0.4, p);
    inc = x_increment(0.2, 0.4, 0.5, p);
    CHECK(e.x == doctest::Approx(s.x + inc.drift + std::sqrt((1 - 0.49) * 0.4 * 0.5)));
    reset_bernoulli_clamp_count();
    bernoulli_step(LogHestonState{4.6, -1e-3, 0.0}, 0.5, 1.0, false, 0.1, p);
    CHECK(bernoulli_clamp_count() == 1);
}

TEST_CASE("asian_update") {
    LogHestonState s{0.0, 0.0, 2.0};
    CHECK(asian_update(s, 0.0, 0.0, 1.0).i == 3.0);
    const double c = 0.3, T = 2.0;
    LogHestonState a{c, 0.0, 0.0};
    for (int k = 0; k < 8; ++k) a = asian_update(a, c, c, T / 8);
    CHECK(a.i == doctest::Approx(T * std::exp(c)).epsilon(1e-15));
    CHECK_THROWS_AS(asian_update(s, 0.0, 800.0, 1.0), std::overflow_error);
}

TEST_CASE("scheme adapter steps agree with the free functions") {
    HestonParams p = params();
    HestonPayoff put;
    HestonScheme nv(HestonSchemeKind::nv, p, 1.0, put);
    HestonScheme bern(HestonSchemeKind::bernoulli_nv, p, 1.0, put);
    HestonScheme::State s{p.x0, 0.25, 0.0, 0.0};
    for (double gx : {-1.0, 0.3})
        for (double gy : {-0.8, 1.7}) {
            HestonScheme::Noise nz{gx, gy, 0.0, 0.0, true};
            auto a = nv.step(s, 0.25, nz);
            auto b = nv_step(LogHestonState{s.x, s.y, 0.0}, 0.25, gx, gy, p);
            CHECK(a.x == doctest::Approx(b.x).epsilon(1e-14));
            CHECK(a.y == doctest::Approx(b.y).epsilon(1e-14));
            auto c = bern.step(s, 0.25, nz);
            auto d = bernoulli_step(LogHestonState{s.x, s.y, 0.0}, 0.25, gx, true, b.y, p);
            CHECK(c.x == doctest::Approx(d.x).epsilon(1e-14));
        }
    CHECK_THROWS_AS(HestonScheme(HestonSchemeKind::nv, params(-0.7, 1.5), 1.0, put), RegimeError);
    CHECK_NOTHROW(HestonScheme(HestonSchemeKind::bernoulli_phi_b, params(-0.7, 1.5), 1.0, put));
    CHECK(parse_heston_scheme("exact") == HestonSchemeKind::ex);
    CHECK(parse_heston_scheme("phi_a") == HestonSchemeKind::bernoulli_phi_a);
    CHECK_THROWS_AS(parse_heston_scheme("euler"), std::invalid_argument);
}

TEST_CASE("conditional sampling keeps x Gaussian given the variance path") {
    HestonParams p = params();
    HestonPayoff put;
    put.strike = 105.0;
    HestonScheme plain(HestonSchemeKind::nv, p, 1.0, put, false);
    HestonScheme cond(HestonSchemeKind::nv, p, 1.0, put, true);
    HestonScheme::State s = cond.initial();
    HestonScheme::Noise nz{0.0, 0.4, 0.0, 0.0, false};
    auto a = plain.step(plain.initial(), 0.5, nz);
    auto b = cond.step(s, 0.5, nz);
    CHECK(a.x == doctest::Approx(b.x));  // zero x-Gaussian: plain step = conditional mean
    CHECK(b.v == doctest::Approx(x_increment(p.cir.x0, b.y, 0.5, p).var));
}

}
