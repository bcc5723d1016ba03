#include "weakboost/hybrid_pde.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace wb {

namespace {

void require_sigma(const HestonParams& p) {
    if (!(p.cir.sigma > 0.0)) throw std::invalid_argument("hybrid: sigma must be > 0");
}

}  // namespace

std::pair<double, double> transform_initial(double s, double y, const HestonParams& p) {
    if (!(s > 0.0)) throw std::invalid_argument("hybrid: spot must be > 0");
    require_sigma(p);
    return {std::log(s) - p.rho / p.cir.sigma * y, y};
}

double transform_back(double x, double y, const HestonParams& p) {
    return std::exp(x + p.rho / p.cir.sigma * y);
}

double hybrid_mu_x(double y, const HestonParams& p) {
    const auto& c = p.cir;
    return p.r - p.delta - p.rho * c.a / c.sigma + (p.rho * c.b / c.sigma - 0.5) * y;
}

HybridLattice build_lattice(double y0, const CirParams& p, int N, double T) {
    if (N < 1) throw std::invalid_argument("build_lattice: N must be >= 1");
    if (!(T > 0.0)) throw std::invalid_argument("build_lattice: T must be > 0");
    if (y0 < 0.0) throw std::invalid_argument("build_lattice: negative initial variance");
    HybridLattice lat;
    lat.N = N;
    lat.T = T;
    lat.h = T / N;
    double sq = std::sqrt(y0), step = 0.5 * p.sigma * std::sqrt(lat.h);
    lat.y.resize(N + 1);
    for (int n = 0; n <= N; ++n) {
        lat.y[n].resize(n + 1);
        for (int k = 0; k <= n; ++k) {
            double r = sq + step * (2 * k - n);
            lat.y[n][k] = r > 0.0 ? r * r : 0.0;
        }
    }
    lat.k_up.resize(N);
    lat.k_down.resize(N);
    lat.p_up.resize(N);
    for (int n = 0; n < N; ++n) {
        const auto& cur = lat.y[n];
        const auto& nxt = lat.y[n + 1];
        lat.k_up[n].resize(n + 1);
        lat.k_down[n].resize(n + 1);
        lat.p_up[n].resize(n + 1);
        for (int k = 0; k <= n; ++k) {
            double m = cur[k] + (p.a - p.b * cur[k]) * lat.h;
            int ku = n + 1;
            for (int j = k + 1; j <= n + 1; ++j)
                if (m <= nxt[j]) {
                    ku = j;
                    break;
                }
            int kd = 0;
            for (int j = k; j >= 0; --j)
                if (m >= nxt[j]) {
                    kd = j;
                    break;
                }
            double den = nxt[ku] - nxt[kd];
            double pu = den > 0.0 ? (m - nxt[kd]) / den : 1.0;
            lat.k_up[n][k] = ku;
            lat.k_down[n][k] = kd;
            lat.p_up[n][k] = std::clamp(pu, 0.0, 1.0);
        }
    }
    return lat;
}

TridiagonalOp assemble_operator(double y, const HestonParams& p, double h, double dx, int x_count) {
    if (!(dx > 0.0)) throw std::invalid_argument("assemble_operator: dx must be > 0");
    if (x_count < 3) throw std::invalid_argument("assemble_operator: need at least 3 points");
    double alpha = h / dx * hybrid_mu_x(y, p);
    // diffusion of the decorrelated x is (1 - rho^2) y
    double beta = h / (2.0 * dx * dx) * (1.0 - p.rho * p.rho) * std::max(0.0, y);
    double lo = -beta - (alpha < 0.0 ? -alpha : 0.0);
    double hi = -beta - (alpha > 0.0 ? alpha : 0.0);
    double mid = 1.0 + 2.0 * beta + std::abs(alpha);
    TridiagonalOp op;
    op.sub.assign(x_count, lo);
    op.diag.assign(x_count, mid);
    op.sup.assign(x_count, hi);
    op.sub[0] = 0.0;
    op.sup[x_count - 1] = 0.0;
    op.diag[0] = op.diag[x_count - 1] = 1.0;
    op.sup[0] = op.sub[x_count - 1] = 0.0;
    return op;
}

void implicit_solve_into(const TridiagonalOp& op, const double* rhs, double* out, std::vector<double>& c) {
    int n = op.size();
    c.resize(n);
    double piv = op.diag[0];
    if (piv == 0.0) throw std::runtime_error("implicit_solve: zero pivot");
    c[0] = op.sup[0] / piv;
    out[0] = rhs[0] / piv;
    for (int i = 1; i < n; ++i) {
        piv = op.diag[i] - op.sub[i] * c[i - 1];
        if (piv == 0.0) throw std::runtime_error("implicit_solve: zero pivot");
        c[i] = op.sup[i] / piv;
        out[i] = (rhs[i] - op.sub[i] * out[i - 1]) / piv;
    }
    for (int i = n - 2; i >= 0; --i) out[i] -= c[i] * out[i + 1];
}

std::vector<double> implicit_solve(const TridiagonalOp& op, const std::vector<double>& rhs) {
    if (static_cast<int>(rhs.size()) != op.size()) throw std::invalid_argument("implicit_solve: size mismatch");
    std::vector<double> out(rhs.size()), scratch;
    implicit_solve_into(op, rhs.data(), out.data(), scratch);
    return out;
}

int hybrid_auto_half(const HestonParams& p, double T, double dx, double sd_mult) {
    const auto& c = p.cir;
    double level = std::max(c.x0, c.b > 0.0 ? c.a / c.b : c.x0 + c.a * T);
    // crude upper quantile of the variance path
    double y_hi = level + sd_mult * c.sigma * std::sqrt(level * T);
    double sd = std::sqrt((1.0 - p.rho * p.rho) * y_hi * T);
    double drift = std::max(std::abs(hybrid_mu_x(0.0, p)), std::abs(hybrid_mu_x(y_hi, p))) * T;
    double shift = std::abs(p.rho / c.sigma) * y_hi;
    return static_cast<int>(std::ceil((sd_mult * sd + drift + shift) / dx));
}

HybridResult backward_sweep(const HybridLattice& lat, const HestonParams& p, const XGrid& grid,
                            const std::function<double(double, double)>& payoff, int threads) {
    int nx = grid.size();
    if (nx < 3) throw std::invalid_argument("backward_sweep: x grid too small");
    threads = std::max(1, threads);
    std::vector<std::vector<double>> next(lat.N + 1, std::vector<double>(nx));
    for (int k = 0; k <= lat.N; ++k)
        for (int j = 0; j < nx; ++j) next[k][j] = payoff(grid.at(j), lat.y[lat.N][k]);

    std::vector<std::vector<double>> cur(lat.N, std::vector<double>(nx));
    auto work = [&](int n, int k_begin, int k_end) {
        std::vector<double> rhs(nx), scratch;
        for (int k = k_begin; k < k_end; ++k) {
            double pu = lat.p_up[n][k], pd = 1.0 - pu;
            const auto& up = next[lat.k_up[n][k]];
            const auto& dn = next[lat.k_down[n][k]];
            for (int j = 0; j < nx; ++j) rhs[j] = pu * up[j] + pd * dn[j];
            auto op = assemble_operator(lat.y[n][k], p, lat.h, grid.dx, nx);
            implicit_solve_into(op, rhs.data(), cur[k].data(), scratch);
        }
    };
    for (int n = lat.N - 1; n >= 0; --n) {
        int count = n + 1;
        int used = std::min(threads, count);
        if (used == 1) {
            work(n, 0, count);
        } else {
            std::vector<std::jthread> pool;
            for (int t = 0; t < used; ++t) pool.emplace_back(work, n, t * count / used, (t + 1) * count / used);
        }
        for (int k = 0; k <= n; ++k) std::swap(next[k], cur[k]);
    }
    HybridResult res;
    res.grid = grid;
    res.values = std::move(next[0]);
    res.at_center = res.values[grid.half];
    return res;
}

HybridPutResult hybrid_put(const HestonParams& p, const PutSpec& spec, int N, double dx, int half, int threads) {
    p.validate();
    spec.validate();
    double y0 = p.cir.x0;
    auto [x0, y] = transform_initial(std::exp(p.x0), y0, p);
    XGrid grid{x0, dx, half > 0 ? half : hybrid_auto_half(p, spec.maturity, dx)};
    auto lat = build_lattice(y, p.cir, N, spec.maturity);
    double k = spec.strike;
    auto f = [&](double x, double yy) { return std::max(0.0, k - transform_back(x, yy, p)); };
    HybridPutResult out;
    out.surface = backward_sweep(lat, p, grid, f, threads);
    out.price = std::exp(-p.r * spec.maturity) * out.surface.at_center;
    return out;
}

}  // namespace wb
