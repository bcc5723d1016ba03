#pragma once

#include <array>
#include <chrono>
#include <concepts>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "weakboost/rng.hpp"
#include "weakboost/stats.hpp"

namespace wb {

enum class CouplingKind { standard, volatility_weighted };

// Refinement plan for one sample of the boosted estimators.
struct GridPlan {
    int n = 1;
    int level = 1;
    std::optional<int> kappa;
    std::optional<int> kappa_prime;
    std::optional<std::pair<int, int>> pair;  // (k1 < k2)

    void validate() const;
};

GridPlan draw_grid(int n, int level, Rng& rng);

// Index <-> pair maps for {(i, j) : 0 <= i < j < n}, lexicographic order.
int pair_count(int n);
std::pair<int, int> pair_from_index(int n, int m);

double coupling_standard(const double* fine, int n);
// sum sqrt(w_k) N_k / sqrt(sum w_k); all-zero weights fall back to coupling_standard.
double coupling_vol_weighted(const double* fine, const double* weights, int n);

inline constexpr int kMaxRefine = 256;

inline constexpr int kMaxControls = 2;
using ControlVec = std::array<double, kMaxControls>;

// Schemes offering control functionals C(state) whose expectation on any
// step sequence is known exactly.
template <class Scheme>
concept HasControl = requires(const Scheme& s, const typename Scheme::State& st, const std::vector<double>& steps) {
    { s.has_control() } -> std::convertible_to<bool>;
    { s.controls(st) } -> std::convertible_to<ControlVec>;
    { s.control_expectation(steps) } -> std::convertible_to<ControlVec>;
};

// Signed grid list of the order-nu operator; defined with the reference pricers.
std::vector<std::pair<double, std::vector<double>>> boosted_grids(int n, int level, double T);

// ---------------------------------------------------------------------------
// Noise tree shared by the coupled schemes of one sample. Level-1 nodes are the
// coarse steps; a refined node owns n children covering the same interval.
// Leaves carry drawn noise; inner nodes carry only their own discrete extras,
// their effective noise being the coupled aggregate of their children.

template <class Noise>
struct NoiseNode {
    Noise own{};
    int child = -1;
};

template <class Noise>
struct NoiseTree {
    int n = 1;
    double T = 1.0;
    std::vector<NoiseNode<Noise>> nodes;
};

// Which nodes a path refines: level-1 indices (at most two) and optionally
// one child of `kappa`.
struct PathSpec {
    int r1 = -1, r2 = -1;
    int kappa = -1, kappa_prime = -1;

    bool refines(int j) const { return j == r1 || j == r2; }
};

// Terminal states of X^{n,0..5}; entries beyond the plan's level are unset.
template <class State>
struct CoupledStates {
    std::array<State, 6> x{};
    std::array<bool, 6> valid{};
};

template <class Scheme>
class CoupledSimulator {
public:
    using State = typename Scheme::State;
    using Noise = typename Scheme::Noise;
    using Carry = typename Scheme::Carry;

    CoupledSimulator(const Scheme& s, CouplingKind c) : scheme_(s), coupling_(c) {}

    // Draws leaves in time order along the union grid of the plan.
    void build_tree(const GridPlan& plan, Rng& rng, NoiseTree<Noise>& tree, bool refine_all = false) const {
        tree.n = plan.n;
        tree.T = scheme_.maturity();
        tree.nodes.assign(plan.n, NoiseNode<Noise>{});
        Carry carry = scheme_.carry_init();
        const double h1 = tree.T / plan.n;
        for (int j = 0; j < plan.n; ++j) {
            bool has_children = refine_all || (plan.kappa && *plan.kappa == j) ||
                                (plan.pair && (plan.pair->first == j || plan.pair->second == j));
            int grand = -1;
            if (plan.level >= 3 && plan.kappa && *plan.kappa == j && plan.kappa_prime) grand = *plan.kappa_prime;
            if (refine_all && plan.level >= 3 && plan.kappa_prime) grand = *plan.kappa_prime;
            grow(tree, j, h1, has_children ? 1 : 0, grand, rng, carry);
        }
    }

    State run(const NoiseTree<Noise>& tree, const PathSpec& spec) const {
        State s = scheme_.initial();
        const double h1 = tree.T / tree.n;
        for (int j = 0; j < tree.n; ++j) s = advance(tree, j, s, h1, spec.refines(j), j == spec.kappa ? spec.kappa_prime : -1);
        return s;
    }

    CoupledStates<State> simulate(const GridPlan& plan, const NoiseTree<Noise>& tree) const {
        CoupledStates<State> out;
        out.x[0] = run(tree, PathSpec{});
        out.valid[0] = true;
        if (plan.level >= 2) {
            int k = *plan.kappa;
            out.x[1] = run(tree, PathSpec{k, -1, -1, -1});
            out.valid[1] = true;
            if (plan.level >= 3) {
                out.x[2] = run(tree, PathSpec{k, -1, k, *plan.kappa_prime});
                out.valid[2] = true;
                if (plan.pair) {
                    auto [k1, k2] = *plan.pair;
                    out.x[3] = run(tree, PathSpec{k1, -1, -1, -1});
                    out.x[4] = run(tree, PathSpec{k2, -1, -1, -1});
                    out.x[5] = run(tree, PathSpec{k1, k2, -1, -1});
                    out.valid[3] = out.valid[4] = out.valid[5] = true;
                }
            }
        }
        return out;
    }

    // Plain scheme on the uniform n-step grid.
    State run_plain(int n, Rng& rng) const {
        Carry carry = scheme_.carry_init();
        State s = scheme_.initial();
        const double h = scheme_.maturity() / n;
        for (int j = 0; j < n; ++j) {
            Noise nz = scheme_.draw_leaf(rng, h, carry);
            s = scheme_.step(s, h, nz);
        }
        return s;
    }

    const Scheme& scheme() const { return scheme_; }
    CouplingKind coupling() const { return coupling_; }

private:
    // depth_children: 1 if node gets children; grand >= 0 marks the child that
    // gets grandchildren.
    void grow(NoiseTree<Noise>& tree, int idx, double h, int has_children, int grand, Rng& rng, Carry& carry) const {
        if (!has_children) {
            tree.nodes[idx].own = scheme_.draw_leaf(rng, h, carry);
            return;
        }
        const int n = tree.n;
        if (n > kMaxRefine) throw std::invalid_argument("refinement factor too large");
        tree.nodes[idx].own = scheme_.draw_inner(rng);
        int first = static_cast<int>(tree.nodes.size());
        tree.nodes[idx].child = first;
        tree.nodes.resize(tree.nodes.size() + n);
        for (int c = 0; c < n; ++c) grow(tree, first + c, h / n, c == grand ? 1 : 0, -1, rng, carry);
    }

    bool shadow_needed() const { return coupling_ == CouplingKind::volatility_weighted && scheme_.state_weights(); }

    Noise effective(const NoiseTree<Noise>& tree, int idx, const State& s, double h) const {
        const auto& node = tree.nodes[idx];
        if (node.child < 0) return node.own;
        return aggregate_node(tree, node, s, h);
    }

    // Kept out of line: the scratch arrays make for a large stack frame.
    [[gnu::noinline]] Noise aggregate_node(const NoiseTree<Noise>& tree, const NoiseNode<Noise>& node, const State& s,
                                           double h) const {
        const int n = tree.n;
        const double hc = h / n;
        std::array<Noise, kMaxRefine> eff;
        std::array<double, kMaxRefine> w;
        if (shadow_needed()) {
            State sh = s;
            for (int c = 0; c < n; ++c) {
                eff[c] = effective(tree, node.child + c, sh, hc);
                State nx = scheme_.step(sh, hc, eff[c]);
                w[c] = scheme_.weight(sh, nx, eff[c]);
                sh = nx;
            }
        } else {
            for (int c = 0; c < n; ++c) {
                eff[c] = effective(tree, node.child + c, s, hc);
                w[c] = scheme_.noise_weight(eff[c]);
            }
        }
        return scheme_.aggregate(node.own, eff.data(), w.data(), n, coupling_);
    }

    State advance(const NoiseTree<Noise>& tree, int idx, State s, double h, bool refine, int refine_child) const {
        const auto& node = tree.nodes[idx];
        if (!refine || node.child < 0) return scheme_.step(s, h, effective(tree, idx, s, h));
        const int n = tree.n;
        for (int c = 0; c < n; ++c) s = advance(tree, node.child + c, s, h / n, c == refine_child, -1);
        return s;
    }

    Scheme scheme_;
    CouplingKind coupling_;
};

// ---------------------------------------------------------------------------
// Estimators

enum class SampleLayout { independent, shared };

struct BoostedResult {
    Estimate total;       // the boosted estimate; variance/n_samples refer to the base count M1
    Estimate base;        // f(X^{n,0}) over M1 samples
    Estimate correction;  // combined correction over M2 samples
    double gamma = 0.0;   // Cov(f(X^{n,0}), correction) on the shared samples
    uint64_t m1 = 0, m2 = 0;
    double seconds = 0.0;
};

// Per-sample correction of the order-nu estimator from the coupled states.
template <class State, class F>
double correction_value(const CoupledStates<State>& cs, int n, int level, F&& f) {
    if (level < 2) return 0.0;
    double f0 = f(cs.x[0]);
    double f1 = f(cs.x[1]);
    double c = n * (f1 - f0);
    if (level >= 3) {
        double f2 = f(cs.x[2]);
        c += static_cast<double>(n) * n * (f2 - f1);
        if (cs.valid[5]) c += 0.5 * n * (n - 1.0) * (f(cs.x[5]) - f(cs.x[4]) - f(cs.x[3]) + f0);
    }
    return c;
}

inline constexpr uint32_t kStreamBase = 0;
inline constexpr uint32_t kStreamCorrection = 1;
inline constexpr uint32_t kStreamPilot = 2;

struct BoostedRun {
    int n = 1;
    int level = 2;
    uint64_t m1 = 0;
    uint64_t m2 = 0;
    CouplingKind coupling = CouplingKind::standard;
    SampleLayout layout = SampleLayout::shared;
    uint64_t seed = 1;
    int workers = 1;
    // Control variates: every payoff evaluation uses f - beta.C and the exact
    // value of the boosted operator applied to beta.C is added back. beta must
    // come from an independent pilot so the estimator stays unbiased.
    bool use_control = false;
    ControlVec control_beta{};
};

// Theta_D (shared) or Theta_I (independent) estimator of the order-nu
// approximation, nu in {1, 2, 3}.
template <class Scheme>
BoostedResult estimate_boosted(const Scheme& scheme, const BoostedRun& run) {
    using State = typename Scheme::State;
    using Noise = typename Scheme::Noise;
    if (run.n < 1) throw std::invalid_argument("n must be >= 1");
    if (run.level < 1 || run.level > 3) throw std::invalid_argument("estimator level must be 1, 2 or 3");
    auto t0 = std::chrono::steady_clock::now();
    const int n = run.n;
    const int level = run.level;
    uint64_t m1 = run.m1;
    uint64_t m2 = level >= 2 ? run.m2 : 0;
    const bool controlled = run.use_control;
    ControlVec beta = run.control_beta;
    double base_shift = 0.0, total_shift = 0.0;
    if constexpr (HasControl<Scheme>) {
        if (controlled) {
            if (!scheme.has_control()) throw std::invalid_argument("scheme has no control variate for this payoff");
            for (const auto& [w, steps] : boosted_grids(n, level, scheme.maturity())) {
                ControlVec e = scheme.control_expectation(steps);
                double v = 0.0;
                for (int k = 0; k < kMaxControls; ++k) v += beta[k] * e[k];
                total_shift += w * v;
            }
            ControlVec e0 = scheme.control_expectation(std::vector<double>(n, scheme.maturity() / n));
            for (int k = 0; k < kMaxControls; ++k) base_shift += beta[k] * e0[k];
        }
    } else {
        if (controlled) throw std::invalid_argument("scheme has no control variate");
    }
    auto f = [&](const State& s) {
        double v = scheme.payoff(s);
        if constexpr (HasControl<Scheme>) {
            if (controlled) {
                ControlVec c = scheme.controls(s);
                for (int k = 0; k < kMaxControls; ++k) v -= beta[k] * c[k];
            }
        }
        return v;
    };

    auto check = [](double v, uint64_t i) {
        if (!std::isfinite(v)) throw NonFiniteSample(i, v);
    };

    Accumulator base;
    PairAccumulator shared_pair;
    Accumulator corr;

    if (run.layout == SampleLayout::shared) {
        uint64_t m_shared = std::min(m1, m2);
        shared_pair = run_chunked<PairAccumulator>(0, std::max(m1, m2) > 0 ? m_shared : 0, run.workers,
                                                   [&](uint64_t b, uint64_t e, PairAccumulator& acc) {
            Scheme sc = scheme;
            CoupledSimulator<Scheme> sim(sc, run.coupling);
            NoiseTree<Noise> tree;
            for (uint64_t i = b; i < e; ++i) {
                Rng rng(run.seed, kStreamBase, i);
                GridPlan plan = draw_grid(n, level, rng);
                sim.build_tree(plan, rng, tree);
                auto cs = sim.simulate(plan, tree);
                double f0 = f(cs.x[0]);
                double c = correction_value(cs, n, level, f);
                check(f0, i);
                check(c, i);
                acc.add(f0, c);
            }
        });
        Accumulator rest = run_chunked<Accumulator>(m_shared, m1, run.workers, [&](uint64_t b, uint64_t e, Accumulator& acc) {
            Scheme sc = scheme;
            CoupledSimulator<Scheme> sim(sc, run.coupling);
            for (uint64_t i = b; i < e; ++i) {
                Rng rng(run.seed, kStreamBase, i);
                double v = f(sim.run_plain(n, rng));
                check(v, i);
                acc.add(v);
            }
        });
        // base = shared f0 samples + the remaining plain samples
        Accumulator head = Accumulator::from_moments(shared_pair.count(), shared_pair.mean_x(), shared_pair.var_x());
        base = head;
        base.merge(rest);
        if (m2 > m1) {
            Accumulator extra = run_chunked<Accumulator>(m1, m2, run.workers, [&](uint64_t b, uint64_t e, Accumulator& acc) {
                Scheme sc = scheme;
                CoupledSimulator<Scheme> sim(sc, run.coupling);
                NoiseTree<Noise> tree;
                for (uint64_t i = b; i < e; ++i) {
                    Rng rng(run.seed, kStreamBase, i);
                    GridPlan plan = draw_grid(n, level, rng);
                    sim.build_tree(plan, rng, tree);
                    auto cs = sim.simulate(plan, tree);
                    double c = correction_value(cs, n, level, f);
                    check(c, i);
                    acc.add(c);
                }
            });
            corr = Accumulator::from_moments(shared_pair.count(), shared_pair.mean_y(), shared_pair.var_y());
            corr.merge(extra);
        } else {
            corr = Accumulator::from_moments(shared_pair.count(), shared_pair.mean_y(), shared_pair.var_y());
        }
    } else {
        base = run_chunked<Accumulator>(0, m1, run.workers, [&](uint64_t b, uint64_t e, Accumulator& acc) {
            Scheme sc = scheme;
            CoupledSimulator<Scheme> sim(sc, run.coupling);
            for (uint64_t i = b; i < e; ++i) {
                Rng rng(run.seed, kStreamBase, i);
                double v = f(sim.run_plain(n, rng));
                check(v, i);
                acc.add(v);
            }
        });
        corr = run_chunked<Accumulator>(0, m2, run.workers, [&](uint64_t b, uint64_t e, Accumulator& acc) {
            Scheme sc = scheme;
            CoupledSimulator<Scheme> sim(sc, run.coupling);
            NoiseTree<Noise> tree;
            for (uint64_t i = b; i < e; ++i) {
                Rng rng(run.seed, kStreamCorrection, i);
                GridPlan plan = draw_grid(n, level, rng);
                sim.build_tree(plan, rng, tree);
                auto cs = sim.simulate(plan, tree);
                double c = correction_value(cs, n, level, f);
                check(c, i);
                acc.add(c);
            }
        });
    }

    BoostedResult res;
    res.m1 = m1;
    res.m2 = m2;
    res.base = base.estimate();
    res.base.value += base_shift;
    res.correction = corr.count() > 0 ? corr.estimate() : make_estimate(0.0, 0.0, 0);
    res.correction.value += total_shift - base_shift;
    res.gamma = run.layout == SampleLayout::shared ? shared_pair.cov() : 0.0;
    double var_est = (m1 > 0 ? res.base.variance / m1 : 0.0);
    if (m2 > 0) var_est += res.correction.variance / m2;
    if (run.layout == SampleLayout::shared && m1 > 0 && m2 > 0) {
        // Cov(mean_{M1} f0, mean_{M2} C) = min(M1, M2) Gamma / (M1 M2)
        var_est += 2.0 * static_cast<double>(std::min(m1, m2)) * res.gamma / (static_cast<double>(m1) * m2);
    }
    var_est = std::max(0.0, var_est);
    res.total = make_estimate(res.base.value + res.correction.value, var_est * std::max<uint64_t>(m1, 1),
                              std::max<uint64_t>(m1, 1));
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

// Variance statistics used by the sample allocation.
struct PilotStats {
    double sigma2_sq = 0.0;  // Var of the base term (after the control variate, if any)
    double sigma4_sq = 0.0;  // Var of the correction
    double gamma = 0.0;      // covariance
    double zeta = 2.5;       // cost(correction sample) / cost(base sample)
    double t1 = 0.0;         // seconds per base sample
    ControlVec control_beta{};
};

// Least-squares beta of f(X^{n,0}) on the controls (with intercept).
template <class Scheme, class States>
ControlVec fit_control(const Scheme& scheme, const States& paths) {
    // normal equations for [1, C_0, C_1]
    std::array<std::array<double, kMaxControls + 2>, kMaxControls + 1> a{};
    for (const auto& cs : paths) {
        ControlVec c = scheme.controls(cs.x[0]);
        std::array<double, kMaxControls + 1> row{1.0};
        for (int k = 0; k < kMaxControls; ++k) row[k + 1] = c[k];
        double y = scheme.payoff(cs.x[0]);
        for (int r = 0; r <= kMaxControls; ++r) {
            for (int q = 0; q <= kMaxControls; ++q) a[r][q] += row[r] * row[q];
            a[r][kMaxControls + 1] += row[r] * y;
        }
    }
    constexpr int m = kMaxControls + 1;
    // Gauss-Jordan with partial pivoting; singular directions get beta 0
    std::array<bool, m> dead{};
    for (int col = 0; col < m; ++col) {
        int piv = col;
        for (int r = col + 1; r < m; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        if (std::fabs(a[col][col]) < 1e-12 * std::max(1.0, std::fabs(a[0][0]))) {
            dead[col] = true;
            continue;
        }
        for (int r = 0; r < m; ++r) {
            if (r == col) continue;
            double fct = a[r][col] / a[col][col];
            for (int q = col; q <= m; ++q) a[r][q] -= fct * a[col][q];
        }
    }
    ControlVec beta{};
    for (int k = 0; k < kMaxControls; ++k)
        beta[k] = dead[k + 1] ? 0.0 : a[k + 1][m] / a[k + 1][k + 1];
    return beta;
}

template <class Scheme>
PilotStats pilot_run(const Scheme& scheme, int n, int level, CouplingKind coupling, uint64_t seed,
                     uint64_t samples = 10000, bool use_control = false) {
    using Noise = typename Scheme::Noise;
    PilotStats ps;
    CoupledSimulator<Scheme> sim(scheme, coupling);
    NoiseTree<Noise> tree;
    std::vector<CoupledStates<typename Scheme::State>> paths(samples);
    auto t0 = std::chrono::steady_clock::now();
    for (uint64_t i = 0; i < samples; ++i) {
        Rng rng(seed, kStreamPilot, i);
        GridPlan plan = draw_grid(n, level, rng);
        sim.build_tree(plan, rng, tree);
        paths[i] = sim.simulate(plan, tree);
    }
    auto t1 = std::chrono::steady_clock::now();
    volatile double sink = 0.0;
    for (uint64_t i = 0; i < samples; ++i) {
        Rng rng(seed, kStreamPilot, samples + i);
        sink = sink + scheme.payoff(sim.run_plain(n, rng));
    }
    auto t2 = std::chrono::steady_clock::now();
    if (use_control) {
        if constexpr (HasControl<Scheme>) {
            if (!scheme.has_control()) throw std::invalid_argument("scheme has no control variate for this payoff");
            ps.control_beta = fit_control(scheme, paths);
        } else {
            throw std::invalid_argument("scheme has no control variate");
        }
    }
    auto f = [&](const auto& s) {
        double v = scheme.payoff(s);
        if constexpr (HasControl<Scheme>) {
            if (use_control) {
                ControlVec c = scheme.controls(s);
                for (int k = 0; k < kMaxControls; ++k) v -= ps.control_beta[k] * c[k];
            }
        }
        return v;
    };
    PairAccumulator acc;
    for (const auto& cs : paths) acc.add(f(cs.x[0]), correction_value(cs, n, level, f));
    double tc = std::chrono::duration<double>(t1 - t0).count() / samples;
    double tb = std::chrono::duration<double>(t2 - t1).count() / samples;
    ps.sigma2_sq = acc.var_x();
    ps.sigma4_sq = acc.var_y();
    ps.gamma = acc.cov();
    ps.t1 = tb;
    ps.zeta = tb > 0.0 ? std::max(1.05, tc / tb) : 2.5;
    return ps;
}

// Optimal (M1, M2) for a target standard error epsilon of the estimator.
std::pair<uint64_t, uint64_t> allocate_samples(double sigma2_sq, double sigma4_sq, double gamma_cov, double zeta,
                                               double epsilon, SampleLayout mode);

}  // namespace wb
