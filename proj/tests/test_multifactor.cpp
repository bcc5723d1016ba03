#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "weakboost/multifactor.hpp"
#include "weakboost/schemes.hpp"

using namespace wb;

namespace {

HestonParams mf_params() {
    HestonParams p;
    p.rho = -0.7;
    p.cir = CirParams{0.3, 1.0, 0.1, 0.1};
    p.x0 = std::log(100.0);
    return p;
}

}  // namespace

TEST_SUITE("multifactor_heston") {

TEST_CASE("BL2 kernel") {
    KernelNodes k = bl2_nodes();
    CHECK(k.d() == 3);
    CHECK(kernel_eval(k, 0.0) == doctest::Approx(11.21948085).epsilon(1e-10));
    CHECK(k.k0() == doctest::Approx(11.21948085).epsilon(1e-10));
    double prev = kernel_eval(k, 0.0);
    for (double t = 0.01; t < 200; t *= 2) {
        double v = kernel_eval(k, t);
        CHECK(v < prev);
        CHECK(v > 0.0);
        prev = v;
    }
    CHECK(kernel_eval(k, 1e4) < 1e-300);
}

TEST_CASE("kernel validation and CSV loading") {
    CHECK_THROWS_AS((KernelNodes{{1.0, 2.0}, {0.5}}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((KernelNodes{{-1.0}, {0.5}}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((KernelNodes{{}, {}}).validate(), std::invalid_argument);
    auto path = std::filesystem::temp_directory_path() / "weakboost_kernel_test.csv";
    {
        std::ofstream f(path);
        f << "k,rho,gamma\n1,0.5,2.0\n2,3.0,0.25\n";
    }
    KernelNodes k = load_kernel_csv(path.string());
    REQUIRE(k.d() == 2);
    CHECK(k.rhos[1] == 3.0);
    CHECK(k.gammas[0] == 2.0);
    CHECK(kernel_eval(k, 1.0) == doctest::Approx(2.0 * std::exp(-0.5) + 0.25 * std::exp(-3.0)));
    {
        std::ofstream f(path);
        f << "k,rho,gamma\n1,0.5\n";
    }
    CHECK_THROWS(load_kernel_csv(path.string()));
    std::filesystem::remove(path);
    CHECK_THROWS(load_kernel_csv("/nonexistent/kernel.csv"));
}

TEST_CASE("psi1 flow: identity, semigroup, factor decay") {
    KernelNodes k = bl2_nodes();
    MfState s = mf_initial_state(4.6, 0.1, k);
    s.factors[0] = 0.3;
    s.factors[1] = -0.2;
    s.factors[2] = 0.05;
    MfState z = psi1_flow(0.0, s, k);
    for (int j = 0; j < 3; ++j) CHECK(z.factors[j] == s.factors[j]);
    MfState a = psi1_flow(0.3, psi1_flow(0.2, s, k), k);
    MfState b = psi1_flow(0.5, s, k);
    for (int j = 0; j < 3; ++j) {
        CHECK(a.factors[j] == doctest::Approx(b.factors[j]).epsilon(1e-14));
        CHECK(b.factors[j] == doctest::Approx(s.factors[j] * std::exp(-0.5 * k.rhos[j])));
    }
    CHECK(b.x == s.x);
    CHECK(b.y_level == s.y_level);
    CHECK(mf_variance(s, k) ==
          doctest::Approx(0.1 + 0.3 * k.gammas[0] - 0.2 * k.gammas[1] + 0.05 * k.gammas[2]));
}

TEST_CASE("remap shifts every factor by the same amount") {
    KernelNodes k = bl2_nodes();
    MfState s = mf_initial_state(0.0, 0.1, k);
    s.factors[1] = 0.4;
    auto same = remap_Ay(s, 0.7, 0.7, k);
    for (int j = 0; j < 3; ++j) CHECK(same[j] == s.factors[j]);
    auto f = remap_Ay(s, 0.2, 0.5, k);
    MfState t = s;
    t.factors = f;
    // the variance moves by exactly y' after - y' before
    CHECK(mf_variance(t, k) - mf_variance(s, k) == doctest::Approx(0.3).epsilon(1e-13));
}

TEST_CASE("one factor with no decay reduces to the NV log-Heston step") {
    KernelNodes one{{1.0}, {0.0}};
    HestonParams p = mf_params();
    p.cir.sigma = 0.5;
    p.cir.a = 0.2;
    p.cir.x0 = 0.2;
    for (double gx : {-1.2, 0.4})
        for (double gy : {-0.7, 1.9}) {
            MfState s = mf_initial_state(p.x0, p.cir.x0, one);
            MfState m = mf_step(s, 0.25, gx, gy, p, one);
            LogHestonState h = nv_step(LogHestonState{p.x0, p.cir.x0, 0.0}, 0.25, gx, gy, p);
            CHECK(m.x == doctest::Approx(h.x).epsilon(1e-13));
            CHECK(mf_variance(m, one) == doctest::Approx(h.y).epsilon(1e-13));
        }
}

TEST_CASE("mf_step identity and regime check") {
    KernelNodes k = bl2_nodes();
    HestonParams p = mf_params();
    MfState s = mf_initial_state(p.x0, p.cir.x0, k);
    MfState z = mf_step(s, 0.0, 1.0, 1.0, p, k);
    CHECK(z.x == s.x);
    HestonParams bad = p;
    bad.cir.sigma = 0.4;  // K(0) sigma^2 = 1.795 > 4a = 1.2
    CHECK_THROWS_AS(mf_step(s, 0.1, 0.0, 0.0, bad, k), RegimeError);
    HestonPayoff put;
    CHECK_THROWS_AS(MultifactorScheme(bad, k, 1.0, put), RegimeError);
    CHECK_NOTHROW(MultifactorScheme(p, k, 1.0, put));
    CirParams in = mf_inner_cir(p.cir, k);
    CHECK(in.a == doctest::Approx(p.cir.a * k.k0()));
    CHECK(in.b == doctest::Approx(p.cir.b * k.k0()));
    CHECK(in.sigma == doctest::Approx(p.cir.sigma * k.k0()));
    CHECK(in.x0 == p.cir.x0);
}

TEST_CASE("scheme step matches mf_step, conditional mode drops the x noise") {
    KernelNodes k = bl2_nodes();
    HestonParams p = mf_params();
    HestonPayoff put;
    put.strike = 105.0;
    MultifactorScheme plain(p, k, 1.0, put);
    MultifactorScheme cond(p, k, 1.0, put, true);
    auto s = plain.initial();
    MultifactorScheme::Noise nz{0.8, -0.3};
    auto a = plain.step(s, 0.125, nz);
    MfState m = mf_step(s.m, 0.125, 0.8, -0.3, p, k);
    CHECK(a.m.x == doctest::Approx(m.x).epsilon(1e-14));
    for (int j = 0; j < 3; ++j) CHECK(a.m.factors[j] == doctest::Approx(m.factors[j]).epsilon(1e-14));
    auto c = cond.step(s, 0.125, nz);
    MfState m0 = mf_step(s.m, 0.125, 0.0, -0.3, p, k);
    CHECK(c.m.x == doctest::Approx(m0.x).epsilon(1e-14));
    CHECK(c.v > 0.0);
}

}
