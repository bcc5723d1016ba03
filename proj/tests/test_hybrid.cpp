#include <cmath>
#include <vector>

#include "doctest.h"
#include "weakboost/hybrid_pde.hpp"
#include "weakboost/rng.hpp"

using namespace wb;

namespace {

HestonParams fig31() {
    HestonParams p;
    p.rho = -0.7;
    p.cir = CirParams{0.2, 1.0, 0.5, 0.2};
    p.x0 = std::log(100.0);
    return p;
}

std::vector<double> multiply(const TridiagonalOp& op, const std::vector<double>& v) {
    int n = op.size();
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        out[i] = op.diag[i] * v[i];
        if (i > 0) out[i] += op.sub[i] * v[i - 1];
        if (i + 1 < n) out[i] += op.sup[i] * v[i + 1];
    }
    return out;
}

}  // namespace

TEST_SUITE("hybrid_pde") {

TEST_CASE("coordinate transform") {
    HestonParams p = fig31();
    auto [x, y] = transform_initial(100.0, 0.2, p);
    CHECK(x == doctest::Approx(std::log(100.0) + 1.4 * 0.2));
    CHECK(y == 0.2);
    CHECK(transform_back(x, y, p) == doctest::Approx(100.0));
    CHECK_THROWS_AS(transform_initial(0.0, 0.2, p), std::invalid_argument);
    HestonParams q = p;
    q.cir.sigma = 0.0;
    CHECK_THROWS_AS(transform_initial(100.0, 0.2, q), std::invalid_argument);
    p.r = 0.05;
    p.delta = 0.01;
    CHECK(hybrid_mu_x(0.0, p) == doctest::Approx(0.04 + 0.7 * 0.2 / 0.5));
    CHECK(hybrid_mu_x(1.0, p) - hybrid_mu_x(0.0, p) == doctest::Approx(-0.7 / 0.5 - 0.5));
}

TEST_CASE("lattice structure") {
    CirParams c{0.2, 1.0, 0.5, 0.2};
    HybridLattice one = build_lattice(0.2, c, 1, 1.0);
    CHECK(one.y.size() == 2);
    CHECK(one.y[0][0] == doctest::Approx(0.2).epsilon(1e-15));
    HybridLattice lat = build_lattice(0.2, c, 50, 1.0);
    CHECK(lat.h == doctest::Approx(0.02));
    for (int n = 0; n <= 50; ++n) {
        REQUIRE(lat.y[n].size() == static_cast<size_t>(n + 1));
        for (int k = 0; k < n; ++k) CHECK(lat.y[n][k] <= lat.y[n][k + 1]);
    }
    for (int n = 0; n < 50; ++n)
        for (int k = 0; k <= n; ++k) {
            double pu = lat.p_up[n][k];
            CHECK(pu >= 0.0);
            CHECK(pu <= 1.0);
            int ku = lat.k_up[n][k], kd = lat.k_down[n][k];
            CHECK(kd <= ku);
            double m = lat.y[n][k] + (c.a - c.b * lat.y[n][k]) * lat.h;
            double y_up = lat.y[n + 1][ku], y_dn = lat.y[n + 1][kd];
            if (y_dn <= m && m <= y_up) CHECK(pu * y_up + (1 - pu) * y_dn == doctest::Approx(m).epsilon(1e-12));
        }
    CHECK_THROWS_AS(build_lattice(0.2, c, 0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_lattice(-0.1, c, 5, 1.0), std::invalid_argument);
}

TEST_CASE("lattice floors at zero") {
    CirParams c{0.05, 1.0, 1.0, 0.01};
    HybridLattice lat = build_lattice(0.01, c, 40, 1.0);
    bool hit = false;
    for (const auto& row : lat.y)
        for (double y : row) {
            CHECK(y >= 0.0);
            hit = hit || y == 0.0;
        }
    CHECK(hit);
}

TEST_CASE("operator rows") {
    HestonParams p = fig31();
    p.r = p.delta + p.rho * p.cir.a / p.cir.sigma;  // zero drift at y = 0
    TridiagonalOp id = assemble_operator(0.0, p, 0.01, 0.01, 7);
    for (int i = 0; i < 7; ++i) {
        CHECK(id.diag[i] == doctest::Approx(1.0));
        CHECK(id.sub[i] == doctest::Approx(0.0));
        CHECK(id.sup[i] == doctest::Approx(0.0));
    }
    for (double y : {0.0, 0.05, 0.3, 1.5}) {
        TridiagonalOp op = assemble_operator(y, fig31(), 0.01, 0.01, 9);
        for (int i = 1; i < 8; ++i) {
            CHECK(op.sub[i] + op.diag[i] + op.sup[i] == doctest::Approx(1.0).epsilon(1e-13));
            CHECK(op.sub[i] <= 0.0);
            CHECK(op.sup[i] <= 0.0);
        }
        CHECK(op.diag[0] == 1.0);
        CHECK(op.diag[8] == 1.0);
    }
    CHECK_THROWS_AS(assemble_operator(0.1, fig31(), 0.01, 0.0, 9), std::invalid_argument);
    CHECK_THROWS_AS(assemble_operator(0.1, fig31(), 0.01, 0.01, 2), std::invalid_argument);
}

TEST_CASE("implicit solve") {
    TridiagonalOp op = assemble_operator(0.4, fig31(), 0.05, 0.02, 41);
    std::vector<double> zero(41, 0.0), one(41, 3.0);
    for (double v : implicit_solve(op, zero)) CHECK(v == 0.0);
    for (double v : implicit_solve(op, one)) CHECK(v == doctest::Approx(3.0).epsilon(1e-13));
    Rng rng(2, 0, 0);
    std::vector<double> rhs(41), bigger(41);
    for (int i = 0; i < 41; ++i) {
        rhs[i] = rng.normal();
        bigger[i] = rhs[i] + rng.uniform();
    }
    auto sol = implicit_solve(op, rhs);
    auto back = multiply(op, sol);
    for (int i = 0; i < 41; ++i) CHECK(back[i] == doctest::Approx(rhs[i]).epsilon(1e-12));
    auto sol2 = implicit_solve(op, bigger);
    for (int i = 0; i < 41; ++i) CHECK(sol2[i] >= sol[i]);
    CHECK_THROWS_AS(implicit_solve(op, std::vector<double>(40)), std::invalid_argument);
}

TEST_CASE("backward sweep keeps constants") {
    HestonParams p = fig31();
    HybridLattice lat = build_lattice(p.cir.x0, p.cir, 20, 1.0);
    XGrid g{transform_initial(100.0, p.cir.x0, p).first, 0.02, 60};
    HybridResult r = backward_sweep(lat, p, g, [](double, double) { return 1.75; });
    for (double v : r.values) CHECK(v == doctest::Approx(1.75).epsilon(1e-12));
    CHECK(r.at_center == doctest::Approx(1.75).epsilon(1e-12));
}

TEST_CASE("hybrid put") {
    HestonParams p = fig31();
    PutSpec spec{105.0, 1.0};
    HybridPutResult r = hybrid_put(p, spec, 100, 0.01);
    CHECK(r.price == doctest::Approx(heston_put_fourier(p, spec)).epsilon(0.01));
    // undiscounted put value is non-increasing in x at fixed y
    const auto& v = r.surface.values;
    for (size_t j = 1; j < v.size(); ++j) CHECK(v[j] <= v[j - 1] + 1e-12);
    for (double u : v) {
        CHECK(u >= -1e-12);
        CHECK(u <= 105.0 + 1e-9);
    }
    // more threads, same numbers
    HybridPutResult t = hybrid_put(p, spec, 100, 0.01, 0, 3);
    CHECK(t.price == doctest::Approx(r.price).epsilon(1e-14));
    CHECK(hybrid_auto_half(p, 1.0, 0.01) > 0);
}

}
