#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>

#include "doctest.h"
#include "weakboost/cir.hpp"
#include "weakboost/stats.hpp"

using namespace wb;

namespace {

const CirParams kFig{0.2, 0.5, 0.65, 0.0};  // low-vol reference set
const CirParams kHigh{0.2, 0.5, 1.5, 0.2};  // sigma^2 > 4a

double gauss_hermite5(const std::function<double(double)>& g) {
    const double r1 = std::sqrt(5.0 - std::sqrt(10.0)), r2 = std::sqrt(5.0 + std::sqrt(10.0));
    auto he4 = [](double x) { return x * x * x * x - 6.0 * x * x + 3.0; };
    double s = 0.0;
    for (double x : {-r2, -r1, 0.0, r1, r2}) s += 120.0 / (25.0 * he4(x) * he4(x)) * g(x);
    return s;
}

double phi_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

// moments of a standard normal restricted to [-c, c]
double central2(double c) { return (2.0 * standard_normal_cdf(c) - 1.0) - 2.0 * c * phi_pdf(c); }
double central4(double c) { return 3.0 * (2.0 * standard_normal_cdf(c) - 1.0) - 2.0 * (c * c * c + 3.0 * c) * phi_pdf(c); }

}  // namespace

TEST_SUITE("cir_schemes") {

TEST_CASE("psi") {
    CHECK(psi(0.0, 0.5) == 0.5);
    CHECK(psi(1.3, 0.0) == 0.0);
    CHECK(psi(1.0, 1.0) == doctest::Approx(0.632120558828557678).epsilon(1e-15));
    // series branch continuous with the closed form
    CHECK(psi(1e-5, 2.0) == doctest::Approx(-std::expm1(-2e-5) / 1e-5).epsilon(1e-14));
    CHECK(psi(-0.5, 1.0) == doctest::Approx(std::expm1(0.5) / 0.5).epsilon(1e-14));
}

TEST_CASE("flow_x0 and flow_x1") {
    CHECK(flow_x0(0.0, 0.37, kFig) == doctest::Approx(0.37));
    CirParams b0{0.2, 0.0, 0.65, 0.0};
    CHECK(flow_x0(0.7, 0.3, b0) == doctest::Approx(0.3 + 0.7 * (0.2 - 0.65 * 0.65 / 4)).epsilon(1e-14));
    CHECK(flow_x0(1.0, 0.0, kFig) == doctest::Approx(0.0742673379792404).epsilon(1e-13));
    CHECK_THROWS_AS(flow_x0(1.0, 0.1, kHigh), RegimeError);

    CHECK(flow_x1(0.0, 0.4, 1.0) == doctest::Approx(0.4));
    CHECK(flow_x1(0.8, 0.0, 0.5) == doctest::Approx(0.04));
    CHECK(flow_x1(0.5, 1.0, 2.0) == 2.25);
}

TEST_CASE("nv_cir_step") {
    CHECK(nv_cir_step(0.3, 0.0, 1.2, kFig) == 0.3);
    CHECK(nv_cir_step(0.2, 0.25, 1.0, kFig) == doctest::Approx(0.359790050607491124).epsilon(1e-13));
    CHECK_THROWS_AS(nv_cir_step(0.2, 0.25, 1.0, kHigh), RegimeError);
    // fast path agrees with the composed flows
    NvConsts c = make_nv_consts(0.25, kFig);
    for (double g : {-3.0, -0.4, 0.0, 1.0, 2.5})
        CHECK(nv_step_fast(0.2, g, c) == doctest::Approx(nv_cir_step(0.2, 0.25, g, kFig)).epsilon(1e-14));
    // nonnegative for any Gaussian draw
    for (double g = -8.0; g <= 8.0; g += 0.25) CHECK(nv_cir_step(0.01, 0.5, g, kFig) >= 0.0);
}

TEST_CASE("nv step with b = 0 has mean x + a t") {
    CirParams p{0.3, 0.0, 0.9, 0.0};
    for (double x : {0.0, 0.5, 2.0})
        for (double t : {0.1, 1.0}) {
            double m = gauss_hermite5([&](double g) { return nv_cir_step(x, t, g, p); });
            CHECK(m == doctest::Approx(x + p.a * t).epsilon(1e-13));
        }
}

TEST_CASE("moment_exact") {
    CHECK(moment_exact(0, 0.7, 0.3, kFig) == 1.0);
    CHECK(moment_exact(1, 0.7, 0.3, kFig) == doctest::Approx(0.3 * std::exp(-0.35) + 0.2 * psi(0.5, 0.7)));
    auto d = moment_coefficients(3, 0.8);
    CHECK(d.size() == 4);
    CHECK(d[3] == 1.0);

    // E[X^L] solves m_L' = L (a + (L-1) sigma^2/2) m_{L-1} - L b m_L; RK4 over [0, 1.5]
    CirParams p{0.3, 0.8, 0.7, 0.4};
    const int L = 4, steps = 4000;
    const double T = 1.5, h = T / steps;
    std::array<double, L + 1> m{};
    for (int l = 0; l <= L; ++l) m[l] = std::pow(p.x0, l);
    auto rhs = [&](const std::array<double, L + 1>& v) {
        std::array<double, L + 1> out{};
        for (int l = 1; l <= L; ++l) out[l] = l * (p.a + (l - 1) * p.sigma * p.sigma / 2) * v[l - 1] - l * p.b * v[l];
        return out;
    };
    for (int s = 0; s < steps; ++s) {
        auto k1 = rhs(m);
        std::array<double, L + 1> tmp{};
        for (int l = 0; l <= L; ++l) tmp[l] = m[l] + 0.5 * h * k1[l];
        auto k2 = rhs(tmp);
        for (int l = 0; l <= L; ++l) tmp[l] = m[l] + 0.5 * h * k2[l];
        auto k3 = rhs(tmp);
        for (int l = 0; l <= L; ++l) tmp[l] = m[l] + h * k3[l];
        auto k4 = rhs(tmp);
        for (int l = 0; l <= L; ++l) m[l] += h / 6 * (k1[l] + 2 * k2[l] + 2 * k3[l] + k4[l]);
    }
    for (int l = 1; l <= L; ++l) CHECK(moment_exact(l, T, p.x0, p) == doctest::Approx(m[l]).epsilon(1e-10));
}

TEST_CASE("threshold_k2") {
    CHECK(threshold_k2(0.5, kFig, kSchemeAY_A) == 0.0);
    CHECK(threshold_k2(0.0, kHigh, kSchemeAY_A) == 0.0);
    const double t = 0.5;
    double k2 = threshold_k2(t, kHigh, kSchemeAY_A);
    CHECK(k2 > 0.0);
    // from x >= K2 both sub-flows of phi(x, t, +-A sqrt t) stay nonnegative
    const double e = std::exp(-0.25 * kHigh.b * t);
    const double c = psi(kHigh.b, 0.5 * t) * (kHigh.a - 0.25 * kHigh.sigma * kHigh.sigma);
    for (double x = k2; x < k2 + 2.0; x += 0.05)
        for (double sgn : {-1.0, 1.0}) {
            double z = e * e * x + c;
            REQUIRE(z >= -1e-12);
            double r = std::sqrt(std::max(0.0, z)) + 0.5 * kHigh.sigma * sgn * kSchemeAY_A * std::sqrt(t);
            CHECK(e * e * r * r + c >= -1e-12);
        }
}

TEST_CASE("phi_A: three-point law above K2, moment matching below") {
    const double t = 0.5;
    // low vol: threshold 0, the three-point Y has E Y^2 = 1, E Y^4 = 3
    double m2 = (2.0 / 6.0) * 3.0, m4 = (2.0 / 6.0) * 9.0;
    CHECK(m2 == doctest::Approx(1.0));
    CHECK(m4 == doctest::Approx(3.0));
    CHECK(general_second_order_step_A(0.3, t, 0.5, kFig) == doctest::Approx(nv_flow_composition(0.3, t, 0.0, kFig)));
    CHECK(general_second_order_step_A(0.3, t, 0.01, kFig) ==
          doctest::Approx(nv_flow_composition(0.3, t, -std::sqrt(3.0 * t), kFig)));

    double k2 = threshold_k2(t, kHigh, kSchemeAY_A);
    for (double x : {0.0, 0.3 * k2, 0.9 * k2}) {
        double pi = lower_branch_pi(t, x, kHigh);
        REQUIRE(pi > 0.0);
        REQUIRE(pi <= 0.5);
        double lo = general_second_order_step_A(x, t, 0.5 * (1.0 - pi), kHigh);
        double hi = general_second_order_step_A(x, t, 1.0 - 0.5 * pi, kHigh);
        double mean = (1.0 - pi) * lo + pi * hi;
        double second = (1.0 - pi) * lo * lo + pi * hi * hi;
        CHECK(mean == doctest::Approx(moment_exact(1, t, x, kHigh)).epsilon(1e-12));
        CHECK(second == doctest::Approx(moment_exact(2, t, x, kHigh)).epsilon(1e-12));
        CHECK(lo >= 0.0);
    }
}

TEST_CASE("phi_B: truncated Gaussian matches the first Gaussian moments") {
    CHECK(truncated_gaussian_b(1.0) == 1.0);
    CHECK(truncated_gaussian_b(2.7) == kSchemeB_z1);
    CHECK(truncated_gaussian_b(-9.0) == -kSchemeB_z2);
    const double c1 = kSchemeB_c1, c2 = kSchemeB_c2;
    double p1 = standard_normal_cdf(c2) - standard_normal_cdf(c1), p2 = 1.0 - standard_normal_cdf(c2);
    double e2 = central2(c1) + 2.0 * (kSchemeB_z1 * kSchemeB_z1 * p1 + kSchemeB_z2 * kSchemeB_z2 * p2);
    double e4 = central4(c1) + 2.0 * (std::pow(kSchemeB_z1, 4) * p1 + std::pow(kSchemeB_z2, 4) * p2);
    CHECK(e2 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(e4 == doctest::Approx(3.0).epsilon(1e-9));

    // lower branch (scaled beta law) reproduces the first two exact moments
    const double t = 0.5, x = 0.05;
    REQUIRE(x < threshold_k2(t, kHigh, kSchemeB_z2));
    Accumulator a1, a2;
    for (uint64_t i = 0; i < 400000; ++i) {
        Rng r(21, 0, i);
        double v = second_order_step_B(x, t, r.normal(), kHigh);
        a1.add(v);
        a2.add(v * v);
    }
    CHECK(std::fabs(a1.mean() - moment_exact(1, t, x, kHigh)) < 4.0 * std::sqrt(a1.variance() / a1.count()));
    CHECK(std::fabs(a2.mean() - moment_exact(2, t, x, kHigh)) < 4.0 * std::sqrt(a2.variance() / a2.count()));
}

TEST_CASE("exact sampler: atom and identity") {
    Rng r(1, 0, 0);
    CHECK(exact_cir_sample(0.0, 0.42, kFig, r) == 0.42);
    CirParams zero{0.0, 0.5, 0.65, 0.0};
    for (uint64_t i = 0; i < 1000; ++i) {
        Rng q(2, 0, i);
        REQUIRE(exact_cir_sample(1.0, 0.0, zero, q) == 0.0);
    }
}

TEST_CASE("exact sampler: chi-square goodness of fit against the noncentral law") {
    const double t = 0.8, x = 0.3;
    const CirParams& p = kFig;
    const double c = 4.0 / (p.sigma * p.sigma * psi(p.b, t));
    boost::math::non_central_chi_squared law(4.0 * p.a / (p.sigma * p.sigma), c * std::exp(-p.b * t) * x);
    const int bins = 20;
    std::vector<double> edges;
    for (int k = 1; k < bins; ++k) edges.push_back(boost::math::quantile(law, static_cast<double>(k) / bins) / c);
    std::vector<int> count(bins, 0);
    const int M = 100000;
    for (int i = 0; i < M; ++i) {
        Rng r(3, 0, i);
        double v = exact_cir_sample(t, x, p, r);
        count[std::upper_bound(edges.begin(), edges.end(), v) - edges.begin()]++;
    }
    double stat = 0.0, e = static_cast<double>(M) / bins;
    for (int k : count) stat += (k - e) * (k - e) / e;
    double crit = boost::math::quantile(boost::math::chi_squared(bins - 1), 0.999);
    CHECK(stat < crit);
}

TEST_CASE("exact sampler: moments") {
    const double t = 0.5, x = 0.1;
    CirParams p{0.3, 1.0, 0.9, x};
    Accumulator m1, m2;
    for (uint64_t i = 0; i < 300000; ++i) {
        Rng r(4, 0, i);
        double v = exact_cir_sample(t, x, p, r);
        m1.add(v);
        m2.add(v * v);
    }
    CHECK(std::fabs(m1.mean() - moment_exact(1, t, x, p)) < 4.0 * std::sqrt(m1.variance() / m1.count()));
    CHECK(std::fabs(m2.mean() - moment_exact(2, t, x, p)) < 4.0 * std::sqrt(m2.variance() / m2.count()));
}

TEST_CASE("Poisson first-order step") {
    const CirParams p{0.04, 0.1, 2.0, 0.3};
    Rng r0(1, 0, 0);
    CHECK(poisson_first_order_step(0.3, 0.0, p, r0) == 0.3);
    // x = 0 and a tiny a: the inner Poisson mean is ~v, so the output is 0 almost surely
    CirParams tiny{1e-12, 0.1, 2.0, 0.0};
    int nonzero = 0;
    for (uint64_t i = 0; i < 10000; ++i) {
        Rng r(5, 0, i);
        if (poisson_first_order_step(0.0, 0.5, tiny, r) != 0.0) ++nonzero;
    }
    CHECK(nonzero == 0);

    // the step reproduces the first two exact moments; third moment differs
    const double t = 0.5, x = 0.3;
    Accumulator a1, a2;
    for (uint64_t i = 0; i < 1000000; ++i) {
        Rng r(6, 0, i);
        double v = poisson_first_order_step(x, t, p, r);
        a1.add(v);
        a2.add(v * v);
    }
    CHECK(std::fabs(a1.mean() - moment_exact(1, t, x, p)) < 4.0 * std::sqrt(a1.variance() / a1.count()));
    CHECK(std::fabs(a2.mean() - moment_exact(2, t, x, p)) < 4.0 * std::sqrt(a2.variance() / a2.count()));
}

TEST_CASE("high_vol_split") {
    const CirParams p{0.04, 0.1, 2.0, 0.3};
    HighVolSplit s = high_vol_split([](double) { return 2.0; }, 1.0, 0.3, p);
    CHECK(s.f0 == 2.0);
    CHECK(divided_difference_at_zero([](double) { return 2.0; }, 0.7, s.f0) == 0.0);
    CHECK(s.weight1 == doctest::Approx(0.04 * psi(0.1, 1.0)));
    CHECK(s.weight2 == doctest::Approx(std::exp(-0.1) * 0.3));
    CHECK(s.p1.a == doctest::Approx(0.04 + 2.0));
    CHECK(s.p2.a == doctest::Approx(0.04 + 4.0));
    // for f(z) = z the split is exact: E X = a psi + e^{-bt} x
    HighVolSplit lin = high_vol_split([](double z) { return z; }, 1.0, 0.3, p);
    CHECK(lin.f0 + lin.weight1 + lin.weight2 == doctest::Approx(moment_exact(1, 1.0, 0.3, p)));
    CHECK(divided_difference_at_zero([](double z) { return std::exp(-z); }, 0.0, 1.0) ==
          doctest::Approx(-1.0).epsilon(1e-5));
}

}
