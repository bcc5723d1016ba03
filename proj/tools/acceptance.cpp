// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any FAIL.
//   acceptance [--item k ...] [--extended] [--workers w] [--seed s]

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "weakboost/experiments.hpp"
#include "weakboost/hybrid_pde.hpp"
#include "weakboost/reference.hpp"
#include "weakboost/schemes.hpp"

using namespace wb;

namespace {

struct Options {
    int workers = 1;
    uint64_t seed = 20240601;
    bool extended = false;
};

int g_pass = 0, g_fail = 0;

void report(bool ok, const std::string& id, const std::string& msg) {
    std::printf("%s [%s] %s\n", ok ? "PASS" : "FAIL", id.c_str(), msg.c_str());
    std::fflush(stdout);
    (ok ? g_pass : g_fail)++;
}

void info(const std::string& id, const std::string& msg) {
    std::printf("INFO [%s] %s\n", id.c_str(), msg.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

void progress(const PointResult& p, double target) {
    std::fprintf(stderr, "    nu=%d n=%-3d est=%.9g hw=%.2e (target %.2e) M1=%llu M2=%llu %.1fs%s\n", p.level, p.n,
                 p.estimate.value, p.estimate.half_width_95, target, static_cast<unsigned long long>(p.m1),
                 static_cast<unsigned long long>(p.m2), p.seconds, p.capped ? " capped" : "");
}

ExperimentConfig base_cfg(const Options& o) {
    ExperimentConfig c;
    c.seed = o.seed;
    c.workers = o.workers;
    c.max_samples = 600'000'000ull;
    return c;
}

ExperimentConfig cir_cfg(const Options& o, const std::string& scheme, CirParams p, double lambda) {
    ExperimentConfig c = base_cfg(o);
    c.model = ModelKind::cir;
    c.scheme = scheme;
    c.cir = p;
    c.cir_payoff.kind = CirPayoff::Kind::exp_neg;
    c.cir_payoff.lambda = lambda;
    return c;
}

HestonParams heston(double s0, double y0, double a, double b, double sigma, double rho) {
    HestonParams h;
    h.x0 = std::log(s0);
    h.rho = rho;
    h.cir = CirParams{a, b, sigma, y0};
    return h;
}

ExperimentConfig heston_cfg(const Options& o, ModelKind model, const std::string& scheme, const HestonParams& h,
                            HestonPayoff::Kind kind, double strike) {
    ExperimentConfig c = base_cfg(o);
    c.model = model;
    c.scheme = scheme;
    c.heston = h;
    c.heston_payoff.kind = kind;
    c.heston_payoff.strike = strike;
    if (model == ModelKind::multifactor) c.kernel = bl2_nodes();
    return c;
}

// Runs every n at the given level with 95% half-width target(n); returns n -> estimate.
std::map<int, PointResult> run_series(const ExperimentConfig& cfg, int level, const std::vector<int>& ns,
                                      const std::function<double(int)>& target) {
    std::map<int, PointResult> out;
    for (int n : ns) {
        double hw = target(n);
        PointResult p = run_point(cfg, n, level, hw);
        progress(p, hw);
        out[n] = p;
    }
    return out;
}

SlopeFit slope_of(const std::map<int, double>& err) {
    std::vector<std::pair<double, double>> e;
    for (auto [n, v] : err) e.emplace_back(n, std::fabs(v));
    return regress_slope(e);
}

std::string err_list(const std::map<int, double>& err) {
    std::string s;
    for (auto [n, v] : err) s += fmt("%s%d:%.3e", s.empty() ? "" : " ", n, v);
    return s;
}

bool any_capped(const std::map<int, PointResult>& pts) {
    return std::any_of(pts.begin(), pts.end(), [](const auto& kv) { return kv.second.capped; });
}

// Half-width divisors of the expected bias. Second-order slope windows are
// narrow (about +-0.4 around 1.9), and at bias/5 the fitted slope over a short
// n range has a standard deviation near 0.15, so first-order points run at bias/20.
constexpr double kFirstOrderDiv = 20.0;

// ---------------------------------------------------------------------------

void item1(const Options& o) {
    CirParams p{0.2, 0.5, 0.65, 0.0};
    const double lambda = 10.0, T = 1.0;
    ExperimentConfig cfg = cir_cfg(o, "nv", p, lambda);
    const double exact = cir_laplace(lambda, T, p.x0, p);
    auto bias = [&](int n, int level) { return cir_boosted_laplace(lambda, n, level, T, p, VarianceStep::nv) - exact; };

    for (int level : {1, 2}) {
        std::vector<int> ns = level == 1 ? std::vector<int>{2, 3, 4, 5} : std::vector<int>{2, 3, 4};
        const double div = level == 1 ? kFirstOrderDiv : 5.0;
        auto pts = run_series(cfg, level, ns, [&](int n) { return std::fabs(bias(n, level)) / div; });
        std::map<int, double> err;
        for (auto& [n, pr] : pts) err[n] = pr.estimate.value - exact;
        SlopeFit fit = slope_of(err);
        std::string cap = any_capped(pts) ? " (sample cap hit)" : "";
        if (level == 1)
            report(fit.slope >= 1.6 && fit.slope <= 2.4, "1a",
                   fmt("CIR P1 slope %.3f in [1.6, 2.4]; errors %s%s", fit.slope, err_list(err).c_str(), cap.c_str()));
        else {
            report(fit.slope >= 3.2, "1b",
                   fmt("CIR P2 slope %.3f >= 3.2; errors %s%s", fit.slope, err_list(err).c_str(), cap.c_str()));
            double rel = std::fabs(err[3] / exact);
            report(rel <= 5e-3, "1c", fmt("CIR P2(n=3) relative error %.3e <= 5e-3", rel));
        }
    }
    if (o.extended) {
        auto pts = run_series(cfg, 3, {1, 2, 3}, [&](int n) { return std::fabs(bias(n, 3)) / 5.0; });
        std::map<int, double> err;
        for (auto& [n, pr] : pts) err[n] = pr.estimate.value - exact;
        info("1d", fmt("CIR P3 slope %.3f (non-gating); errors %s", slope_of(err).slope, err_list(err).c_str()));
    }
}

// E[g(N)] by 5-point Gauss-Hermite: exact for polynomials of degree <= 9.
double gauss_hermite5(const std::function<double(double)>& g) {
    const double r1 = std::sqrt(5.0 - std::sqrt(10.0)), r2 = std::sqrt(5.0 + std::sqrt(10.0));
    auto he4 = [](double x) { return x * x * x * x - 6.0 * x * x + 3.0; };
    double s = 0.0;
    for (double x : {-r2, -r1, 0.0, r1, r2}) s += 120.0 / (25.0 * he4(x) * he4(x)) * g(x);
    return s;
}

void item2(const Options&) {
    CirParams p{0.2, 0.5, 0.65, 0.0};
    bool ok = true;
    double lo = 1e9, hi = -1e9;
    // starting points away from the zeros of the t^3 error coefficient (x = 0 for m = 4, x ~ 0.3 for m = 3)
    for (double x : {0.2, 1.0, 2.0}) {
        for (int m = 1; m <= 4; ++m) {
            std::vector<double> err;
            for (int k = 3; k <= 8; ++k) {
                double t = std::ldexp(1.0, -k);
                double mom = gauss_hermite5([&](double g) { return std::pow(nv_cir_step(x, t, g, p), m); });
                err.push_back(std::fabs(mom - moment_exact(m, t, x, p)));
            }
            for (size_t i = 0; i + 1 < err.size(); ++i) {
                double r = err[i] / err[i + 1];
                lo = std::min(lo, r);
                hi = std::max(hi, r);
                if (!(r >= 6.0 && r <= 10.0)) {
                    ok = false;
                    std::fprintf(stderr, "    x=%g m=%d t=2^-%zu ratio %.4f\n", x, m, i + 3, r);
                }
            }
        }
    }
    report(ok, "2", fmt("NV one-step moment error halving ratios in [%.3f, %.3f], required within [6, 10]", lo, hi));
}

void item3(const Options& o) {
    const uint64_t M = 1'000'000;
    const double t = 1.0;
    CirParams p{0.2, 0.5, 0.65, 0.3};
    std::array<Accumulator, 4> acc;
    for (uint64_t i = 0; i < M; ++i) {
        Rng rng(o.seed, 11, i);
        double x = exact_cir_sample(t, p.x0, p, rng);
        acc[0].add(x);
        acc[1].add(x * x);
        acc[2].add(x * x * x);
        acc[3].add(std::exp(-10.0 * x));
    }
    for (int m = 1; m <= 3; ++m) {
        double ex = moment_exact(m, t, p.x0, p);
        double z = (acc[m - 1].mean() - ex) / std::sqrt(acc[m - 1].variance() / M);
        report(std::fabs(z) <= 4.0, fmt("3.m%d", m),
               fmt("exact sampler E[X^%d] %.6g vs %.6g, z = %.2f", m, acc[m - 1].mean(), ex, z));
    }
    double lap = cir_laplace(10.0, t, p.x0, p);
    double zl = (acc[3].mean() - lap) / std::sqrt(acc[3].variance() / M);
    report(std::fabs(zl) <= 4.0, "3.laplace", fmt("exact sampler E[exp(-10X)] %.6g vs %.6g, z = %.2f", acc[3].mean(), lap, zl));

    CirParams q{0.0, 0.5, 0.65, 0.3};
    double d = 4.0 * q.b / (q.sigma * q.sigma * (std::exp(q.b * t) - 1.0));
    double mass = std::exp(-d * q.x0 / 2.0);
    uint64_t zeros = 0;
    for (uint64_t i = 0; i < M; ++i) {
        Rng rng(o.seed, 12, i);
        if (exact_cir_sample(t, q.x0, q, rng) == 0.0) ++zeros;
    }
    double f = static_cast<double>(zeros) / M;
    double za = (f - mass) / std::sqrt(mass * (1.0 - mass) / M);
    report(std::fabs(za) <= 4.0, "3.atom", fmt("a = 0 atom mass %.5f vs %.5f, z = %.2f", f, mass, za));
}

void item4(const Options& o) {
    {
        ExperimentConfig c = cir_cfg(o, "nv", CirParams{0.2, 0.5, 0.5, 0.2}, 10.0);
        c.levels = {2};
        c.n_list = {2};
        c.samples = 1'000'000;
        auto rows = cmd_variance(c);
        double v = rows.front().variance;
        report(std::fabs(v / 23.86e-4 - 1.0) <= 0.10, "4a",
               fmt("CIR NV correction variance at n=2: %.4e vs 23.86e-4 (within 10%%)", v));
    }
    {
        ExperimentConfig c = heston_cfg(o, ModelKind::heston, "nv", heston(100, 0.2, 0.2, 1.0, 0.5, -0.7),
                                        HestonPayoff::Kind::put, 105.0);
        c.levels = {2};
        c.n_list = {4};
        c.samples = 1'000'000;
        c.couplings = {CouplingKind::standard, CouplingKind::volatility_weighted};
        auto rows = cmd_variance(c);
        double vst = 0, vav = 0, sst = 0, sav = 0;
        for (const auto& r : rows) {
            (r.coupling == CouplingKind::standard ? vst : vav) = r.variance;
            (r.coupling == CouplingKind::standard ? sst : sav) = r.half_width / 1.96;
        }
        double se = std::sqrt(sst * sst + sav * sav);
        report(vst - vav >= 3.0 * se, "4b",
               fmt("Heston V_av(4) = %.3f < V_st(4) = %.3f by %.1f combined stderr (need >= 3)", vav, vst,
                   (vst - vav) / se));
    }
}

void heston_orders(const Options& o, const std::string& id, const std::string& scheme, VarianceStep kind,
                   const HestonParams& h, double strike, double lo1, double hi1) {
    ExperimentConfig cfg = heston_cfg(o, ModelKind::heston, scheme, h, HestonPayoff::Kind::put, strike);
    cfg.conditional = true;
    cfg.control = true;
    PutSpec spec{strike, 1.0};
    const double ref = heston_put_fourier(h, spec);
    for (int level : {1, 2}) {
        std::vector<int> ns = level == 1 ? std::vector<int>{2, 3, 4, 6, 8} : std::vector<int>{2, 3, 4};
        const double div = level == 1 ? kFirstOrderDiv : 5.0;
        auto pts = run_series(cfg, level, ns, [&](int n) {
            return std::fabs(heston_boosted_put(h, spec, n, level, kind) - ref) / div;
        });
        std::map<int, double> err;
        for (auto& [n, pr] : pts) err[n] = pr.estimate.value - ref;
        SlopeFit fit = slope_of(err);
        std::string cap = any_capped(pts) ? " (sample cap hit)" : "";
        if (level == 1)
            report(fit.slope >= lo1 && fit.slope <= hi1, id + "." + scheme + ".P1",
                   fmt("Heston %s P1 slope %.3f in [%.1f, %.1f]; errors %s%s", scheme.c_str(), fit.slope, lo1, hi1,
                       err_list(err).c_str(), cap.c_str()));
        else
            report(fit.slope >= 3.2, id + "." + scheme + ".P2",
                   fmt("Heston %s P2 slope %.3f >= 3.2; errors %s%s", scheme.c_str(), fit.slope,
                       err_list(err).c_str(), cap.c_str()));
    }
}

void item5(const Options& o) {
    heston_orders(o, "5", "nv", VarianceStep::nv, heston(100, 0.2, 0.2, 1.0, 0.5, -0.7), 105.0, 1.5, 2.4);
    heston_orders(o, "5", "exact", VarianceStep::exact, heston(100, 0.1, 0.1, 1.0, 1.0, -0.9), 105.0, 1.5, 2.4);
}

void item6(const Options& o) {
    ExperimentConfig cfg = heston_cfg(o, ModelKind::heston, "nv", heston(100, 0.2, 0.2, 2.0, 0.5, -0.7),
                                      HestonPayoff::Kind::asian_put, 100.0);
    cfg.control = true;
    // calibration self-differences |P(2n) - P(n)| (8e6-sample runs)
    const std::map<int, double> calib1{{2, 0.3485}, {3, 0.1662}, {4, 0.0956}};
    const std::map<int, double> calib2{{2, 0.117}, {3, 0.0234}, {4, 0.0059}};
    for (int level : {1, 2}) {
        const auto& calib = level == 1 ? calib1 : calib2;
        // each estimate gets half-width |diff|/(div sqrt 2), the tightest over the pairs it enters
        const double div = level == 1 ? kFirstOrderDiv : 5.0;
        std::map<int, double> target;
        for (auto [n, d] : calib)
            for (int m : {n, 2 * n}) {
                double hw = d / (div * std::sqrt(2.0));
                target[m] = target.count(m) ? std::min(target[m], hw) : hw;
            }
        std::vector<int> ns;
        for (auto& kv : target) ns.push_back(kv.first);
        auto pts = run_series(cfg, level, ns, [&](int n) { return target[n]; });
        std::map<int, double> diff;
        for (auto [n, d] : calib) diff[n] = pts[2 * n].estimate.value - pts[n].estimate.value;
        SlopeFit fit = slope_of(diff);
        std::string cap = any_capped(pts) ? " (sample cap hit)" : "";
        if (level == 1)
            report(fit.slope >= 1.5 && fit.slope <= 2.4, "6.P1",
                   fmt("Asian P1 self-difference slope %.3f in [1.5, 2.4]; diffs %s%s", fit.slope,
                       err_list(diff).c_str(), cap.c_str()));
        else
            report(fit.slope >= 3.2, "6.P2",
                   fmt("Asian P2 self-difference slope %.3f >= 3.2; diffs %s%s", fit.slope, err_list(diff).c_str(),
                       cap.c_str()));
    }
}

void item7(const Options& o) {
    HestonParams h = heston(100, 0.2, 0.2, 1.0, 0.5, -0.7);
    PutSpec spec{105.0, 1.0};
    const double ref = heston_put_fourier(h, spec);
    double p1 = hybrid_put(h, spec, 100, 0.01, 0, o.workers).price;
    double p2 = hybrid_put(h, spec, 200, 0.005, 0, o.workers).price;
    double e1 = std::fabs(p1 / ref - 1.0), e2 = std::fabs(p2 / ref - 1.0);
    report(e1 <= 0.01, "7a", fmt("hybrid put %.6f vs Fourier %.6f, relative error %.2e <= 1e-2", p1, ref, e1));
    report(e2 < e1, "7b", fmt("halving (h, dx): relative error %.2e -> %.2e", e1, e2));

    auto [x0, y0] = transform_initial(100.0, h.cir.x0, h);
    HybridLattice lat = build_lattice(y0, h.cir, 100, 1.0);
    double worst_row = 0.0, worst_mean = 0.0;
    bool pu_ok = true;
    for (int n = 0; n < lat.N; ++n)
        for (int k = 0; k <= n; ++k) {
            double pu = lat.p_up[n][k];
            pu_ok = pu_ok && pu >= 0.0 && pu <= 1.0;
            double y = lat.y[n][k];
            TridiagonalOp op = assemble_operator(y, h, lat.h, 0.01, 8);
            for (int i = 0; i < op.size(); ++i)
                worst_row = std::max(worst_row, std::fabs(op.sub[i] + op.diag[i] + op.sup[i] - 1.0));
            double m = y + (h.cir.a - h.cir.b * y) * lat.h;
            const auto& nx = lat.y[n + 1];
            double lo = nx[lat.k_down[n][k]], hi = nx[lat.k_up[n][k]];
            if (m >= lo && m <= hi) worst_mean = std::max(worst_mean, std::fabs(pu * hi + (1.0 - pu) * lo - m));
        }
    report(worst_row <= 1e-12, "7c", fmt("operator row sums: max |sum - 1| = %.2e", worst_row));
    report(pu_ok, "7d", fmt("lattice p_u in [0, 1]; drift matched to %.2e where bracketed", worst_mean));

    XGrid grid{x0, 0.01, hybrid_auto_half(h, 1.0, 0.01)};
    HybridResult one = backward_sweep(lat, h, grid, [](double, double) { return 1.0; }, o.workers);
    double worst_c = 0.0;
    for (double v : one.values) worst_c = std::max(worst_c, std::fabs(v - 1.0));
    report(worst_c <= 1e-12, "7e", fmt("constant payoff preserved: max |V - 1| = %.2e", worst_c));

    HybridLattice small = build_lattice(y0, h.cir, 30, 1.0);
    XGrid g2{x0, 0.02, 200};
    bool mp = true;
    double slack = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        auto f = [&](double x, double y) {
            uint64_t key = std::bit_cast<uint64_t>(x) ^ (std::bit_cast<uint64_t>(y) * 0x9e3779b97f4a7c15ull);
            Rng r(o.seed + trial, 13, key);
            return 10.0 * r.uniform() - 5.0 + trial;
        };
        double fmin = 1e300, fmax = -1e300;
        for (int k = 0; k <= small.N; ++k)
            for (int j = 0; j < g2.size(); ++j) {
                double v = f(g2.at(j), small.y[small.N][k]);
                fmin = std::min(fmin, v);
                fmax = std::max(fmax, v);
            }
        HybridResult res = backward_sweep(small, h, g2, f, 1);
        for (double v : res.values) {
            double out = std::max(fmin - v, v - fmax);
            slack = std::max(slack, out);
            if (out > 1e-12) mp = false;
        }
    }
    report(mp, "7f", fmt("discrete maximum principle on 20 random payoffs (worst excursion %.2e)", std::max(0.0, slack)));
}

void item8(const Options& o) {
    CirParams p{0.04, 0.1, 2.0, 0.3};
    const double T = 1.0;
    ExperimentConfig cfg = cir_cfg(o, "poisson", p, 1.0);
    const double exact = cir_laplace(1.0, T, p.x0, p);
    auto bias = [&](int n) {
        return cir_scheme_laplace(1.0, std::vector<double>(n, T / n), p, VarianceStep::poisson) - exact;
    };
    auto pts = run_series(cfg, 1, {1, 2, 4, 8, 16}, [&](int n) { return std::fabs(bias(n)) / 5.0; });
    std::map<int, double> err;
    for (auto& [n, pr] : pts) err[n] = pr.estimate.value - exact;
    SlopeFit fit = slope_of(err);
    report(fit.slope >= 0.8 && fit.slope <= 1.3, "8a",
           fmt("Poisson scheme slope %.3f in [0.8, 1.3]; errors %s", fit.slope, err_list(err).c_str()));

    auto f = [](double z) { return std::exp(-z); };
    HighVolSplit sp = high_vol_split(f, T, p.x0, p);
    const uint64_t M = 1'000'000;
    Accumulator direct, m1, m2;
    for (uint64_t i = 0; i < M; ++i) {
        Rng r0(o.seed, 14, i), r1(o.seed, 15, i), r2(o.seed, 16, i);
        direct.add(f(exact_cir_sample(T, p.x0, p, r0)));
        m1.add(divided_difference_at_zero(f, exact_cir_sample(T, p.x0, sp.p1, r1), sp.f0));
        m2.add(divided_difference_at_zero(f, exact_cir_sample(T, p.x0, sp.p2, r2), sp.f0));
    }
    double split = sp.f0 + sp.weight1 * m1.mean() + sp.weight2 * m2.mean();
    double var_split = (sp.weight1 * sp.weight1 * m1.variance() + sp.weight2 * sp.weight2 * m2.variance()) / M;
    double se = std::sqrt(var_split + direct.variance() / M);
    double z = (split - direct.mean()) / se;
    report(std::fabs(z) <= 4.0, "8b",
           fmt("high-vol split %.6f vs direct exact MC %.6f (Laplace %.6f), z = %.2f", split, direct.mean(), exact, z));
}

void item9(const Options& o) {
    HestonParams h = heston(100, 0.1, 0.3, 1.0, 0.1, -0.7);
    ExperimentConfig cfg = heston_cfg(o, ModelKind::multifactor, "nv", h, HestonPayoff::Kind::put, 105.0);
    cfg.conditional = true;
    const double ref = mf_put_fourier(h, cfg.kernel, PutSpec{105.0, 1.0});
    // calibration errors of P1 against the Fourier price
    const std::map<int, double> calib{{24, 0.50}, {32, 0.28}, {48, 0.13}, {64, 0.068}};
    std::vector<int> ns;
    for (auto& kv : calib) ns.push_back(kv.first);
    auto pts = run_series(cfg, 1, ns, [&](int n) { return calib.at(n) / 10.0; });
    std::map<int, double> err;
    for (auto& [n, pr] : pts) err[n] = pr.estimate.value - ref;
    SlopeFit fit = slope_of(err);
    report(fit.slope >= 1.5 && fit.slope <= 2.5, "9a",
           fmt("multifactor P1 slope %.3f in [1.5, 2.5] over n = 24..64; errors %s", fit.slope,
               err_list(err).c_str()));

    PointResult a = run_point(cfg, 3, 1, 0.05);
    progress(a, 0.05);
    PointResult b = run_point(cfg, 3, 2, 0.05);
    progress(b, 0.05);
    double e1 = a.estimate.value - ref, e2 = b.estimate.value - ref;
    report(std::fabs(e2) < std::fabs(e1), "9b", fmt("multifactor |err P2(3)| = %.4f < |err P1(3)| = %.4f", std::fabs(e2),
                                                  std::fabs(e1)));
}

// Level-0/1/2 paths of the CIR NV scheme recomputed by hand from the leaf noises of
// a fully refined tree (every coarse node has n children, child kp has n grandchildren).
struct ManualCir {
    const NoiseTree<CirScheme::Noise>& tree;
    const CirScheme& s;

    double eff(int idx) const {
        const auto& nd = tree.nodes[idx];
        if (nd.child < 0) return nd.own.g;
        if (tree.n == 1) return eff(nd.child);
        double sum = 0.0;
        for (int c = 0; c < tree.n; ++c) sum += eff(nd.child + c);
        return sum / std::sqrt(static_cast<double>(tree.n));
    }
    double step(double x, int idx, double h) const {
        CirScheme::Noise nz{};
        nz.g = eff(idx);
        return s.step(x, h, nz);
    }
    // refined: set of coarse indices refined once; deep: coarse index whose child kp is refined again
    double path(const std::set<int>& refined, int deep, int kp) const {
        int n = tree.n;
        double h = tree.T / n, x = s.initial();
        for (int j = 0; j < n; ++j) {
            if (!refined.count(j)) {
                x = step(x, j, h);
                continue;
            }
            int first = tree.nodes[j].child;
            for (int c = 0; c < n; ++c) {
                if (j == deep && c == kp) {
                    int g = tree.nodes[first + c].child;
                    for (int q = 0; q < n; ++q) x = step(x, g + q, h / n / n);
                } else {
                    x = step(x, first + c, h / n);
                }
            }
        }
        return x;
    }
};

void item10(const Options& o) {
    const int samples = 20000;
    auto zero_check = [&](const auto& scheme, CouplingKind c, const std::string& name) {
        CoupledSimulator sim(scheme, c);
        NoiseTree<typename std::decay_t<decltype(scheme)>::Noise> tree;
        double worst = 0.0;
        for (int level : {2, 3})
            for (int i = 0; i < samples; ++i) {
                Rng rng(o.seed, 17, i);
                GridPlan plan = draw_grid(1, level, rng);
                sim.build_tree(plan, rng, tree);
                auto cs = sim.simulate(plan, tree);
                double v = correction_value(cs, 1, level, [&](const auto& st) { return scheme.payoff(st); });
                worst = std::max(worst, std::fabs(v));
            }
        report(worst == 0.0, "10." + name, fmt("n = 1 corrections (levels 2, 3) pathwise zero: max |corr| = %.3g", worst));
    };
    CirParams cp{0.2, 0.5, 0.65, 0.1};
    CirPayoff cf;
    cf.lambda = 10.0;
    zero_check(CirScheme(CirSchemeKind::nv, cp, 1.0, cf), CouplingKind::standard, "cir_nv");
    zero_check(CirScheme(CirSchemeKind::exact, cp, 1.0, cf), CouplingKind::standard, "cir_exact");
    CirParams hv{0.04, 0.1, 2.0, 0.3};
    zero_check(CirScheme(CirSchemeKind::poisson, hv, 1.0, cf), CouplingKind::standard, "cir_poisson");
    HestonParams hp = heston(100, 0.2, 0.2, 1.0, 0.5, -0.7);
    HestonPayoff put;
    put.strike = 105.0;
    for (auto k : {HestonSchemeKind::nv, HestonSchemeKind::ex, HestonSchemeKind::bernoulli_nv})
        zero_check(HestonScheme(k, hp, 1.0, put), CouplingKind::volatility_weighted, "heston_" + to_string(k));
    zero_check(MultifactorScheme(heston(100, 0.1, 0.3, 1.0, 0.1, -0.7), bl2_nodes(), 1.0, put),
               CouplingKind::volatility_weighted, "multifactor");

    // exhaustive enumeration over the refinement choices for a fixed noise tree
    CirScheme s(CirSchemeKind::nv, cp, 1.0, cf);
    CoupledSimulator sim(s, CouplingKind::standard);
    double worst_path = 0.0, worst_id = 0.0;
    for (int n = 1; n <= 4; ++n)
        for (int trial = 0; trial < 50; ++trial) {
            for (int kp = 0; kp < n; ++kp) {
                Rng rng(o.seed, 18, n * 1000 + trial * 10 + kp);
                GridPlan full{n, 3, 0, kp, std::nullopt};
                NoiseTree<CirScheme::Noise> tree;
                sim.build_tree(full, rng, tree, true);
                ManualCir man{tree, s};
                auto f = [&](double x) { return s.payoff(x); };
                double f0 = f(man.path({}, -1, -1));
                double enum_mean = 0.0, nested = 0.0;
                int pc = pair_count(n);
                for (int k = 0; k < n; ++k) {
                    double fk = f(man.path({k}, -1, -1));
                    double fkk = f(man.path({k}, k, kp));
                    nested += (fk - f0) + n * (fkk - fk);  // kp is fixed by the tree
                    for (int m = 0; m < std::max(pc, 1); ++m) {
                        GridPlan plan{n, 3, k, kp, std::nullopt};
                        if (pc > 0) plan.pair = pair_from_index(n, m);
                        auto cs = sim.simulate(plan, tree);
                        worst_path = std::max({worst_path, std::fabs(cs.x[1] - man.path({k}, -1, -1)),
                                               std::fabs(cs.x[2] - man.path({k}, k, kp))});
                        if (plan.pair) {
                            auto [k1, k2] = *plan.pair;
                            worst_path = std::max(worst_path, std::fabs(cs.x[5] - man.path({k1, k2}, -1, -1)));
                        }
                        enum_mean += correction_value(cs, n, 3, f) / (n * std::max(pc, 1));
                    }
                }
                for (int m = 0; m < pc; ++m) {
                    auto [k1, k2] = pair_from_index(n, m);
                    nested += f(man.path({k1, k2}, -1, -1)) - f(man.path({k1}, -1, -1)) -
                              f(man.path({k2}, -1, -1)) + f0;
                }
                worst_id = std::max(worst_id, std::fabs(enum_mean - nested) / std::max(1.0, std::fabs(nested)));
            }
        }
    report(worst_path <= 1e-14, "10.paths", fmt("simulator paths vs hand recomputation: max diff %.2e", worst_path));
    report(worst_id <= 1e-12, "10.enumeration",
           fmt("enumerated mean correction equals the nested-sum form for n <= 4: max rel diff %.2e", worst_id));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks for the weakboost library"};
    Options o;
    std::vector<int> items;
    app.add_option("--item", items, "run only these items (1-10)")->check(CLI::Range(1, 10));
    app.add_flag("--extended", o.extended, "also run the non-gating order-6 check");
    app.add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--seed", o.seed, "base seed");
    CLI11_PARSE(app, argc, argv);
    if (items.empty()) items = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

    const std::map<int, void (*)(const Options&)> table{{1, item1}, {2, item2}, {3, item3}, {4, item4},
                                                         {5, item5}, {6, item6}, {7, item7}, {8, item8},
                                                         {9, item9}, {10, item10}};
    for (int k : items) {
        std::fprintf(stderr, "item %d\n", k);
        try {
            table.at(k)(o);
        } catch (const std::exception& e) {
            report(false, std::to_string(k), std::string("exception: ") + e.what());
        }
    }
    std::printf("%d passed, %d failed\n", g_pass, g_fail);
    return g_fail == 0 ? 0 : 1;
}
