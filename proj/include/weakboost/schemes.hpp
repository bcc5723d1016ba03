#pragma once

// Scheme adapters for the coupled simulator in random_grids.hpp. Each adapter
// exposes State, Noise, Carry and the hooks draw_leaf / draw_inner / step /
// aggregate / weight / payoff.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "weakboost/cir.hpp"
#include "weakboost/heston.hpp"
#include "weakboost/multifactor.hpp"
#include "weakboost/random_grids.hpp"
#include "weakboost/reference.hpp"

namespace wb {

// Per-step-size constants; a path only ever sees a handful of step sizes.
template <class V>
class StepCache {
public:
    template <class Make>
    const V& get(double h, Make make) const {
        for (int c = 0; c < 4; ++c)
            if (h_[c] == h) return v_[c];
        int c = next_;
        next_ = (next_ + 1) % 4;
        h_[c] = h;
        v_[c] = make(h);
        return v_[c];
    }

private:
    mutable std::array<double, 4> h_{-1.0, -1.0, -1.0, -1.0};
    mutable std::array<V, 4> v_{};
    mutable int next_ = 0;
};

enum class CirSchemeKind { nv, phi_a, phi_b, exact, poisson };

CirSchemeKind parse_cir_scheme(const std::string& s);
std::string to_string(CirSchemeKind k);

// Test functions of the CIR experiments.
struct CirPayoff {
    enum class Kind { exp_neg, power, constant };
    Kind kind = Kind::exp_neg;
    double lambda = 1.0;  // exp(-lambda x)
    int power = 1;        // x^power
    double c = 0.0;       // constant

    double operator()(double x) const {
        switch (kind) {
            case Kind::exp_neg: return std::exp(-lambda * x);
            case Kind::power: return std::pow(x, power);
            case Kind::constant: return c;
        }
        return 0.0;
    }
};

class CirScheme {
public:
    using State = double;
    struct Noise {
        double g;
        double y0, y1;  // exact path end points (exact scheme)
        uint64_t key;   // sub-stream key (Poisson scheme)
    };
    struct Carry {
        double y;
    };

    CirScheme(CirSchemeKind kind, const CirParams& p, double T, CirPayoff f);

    double maturity() const { return T_; }
    State initial() const { return p_.x0; }
    Carry carry_init() const { return {p_.x0}; }

    Noise draw_leaf(Rng& rng, double h, Carry& c) const {
        Noise nz{};
        switch (kind_) {
            case CirSchemeKind::exact:
                nz.y0 = c.y;
                nz.y1 = exact_cir_sample(h, c.y, p_, rng);
                c.y = nz.y1;
                break;
            case CirSchemeKind::poisson: nz.key = rng(); break;
            default: nz.g = rng.normal(); break;
        }
        return nz;
    }
    Noise draw_inner(Rng& rng) const {
        Noise nz{};
        if (kind_ == CirSchemeKind::poisson) nz.key = rng();
        return nz;
    }

    State step(State x, double h, const Noise& nz) const {
        switch (kind_) {
            case CirSchemeKind::nv: return nv_step_fast(x, nz.g, nv_.get(h, [&](double hh) { return make_nv_consts(hh, p_); }));
            case CirSchemeKind::phi_a: return general_second_order_step_A(x, h, standard_normal_cdf(nz.g), p_);
            case CirSchemeKind::phi_b: return second_order_step_B(x, h, nz.g, p_);
            case CirSchemeKind::exact: return nz.y1;
            case CirSchemeKind::poisson: {
                Rng sub(nz.key, 0, 0);
                return poisson_first_order_step(x, h, p_, sub);
            }
        }
        return x;
    }

    Noise aggregate(const Noise& own, const Noise* ch, const double*, int n, CouplingKind) const {
        if (n == 1) return ch[0];  // refining by 1 must reproduce the coarse step exactly
        Noise out = own;
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += ch[k].g;
        out.g = s / std::sqrt(static_cast<double>(n));
        out.y0 = ch[0].y0;
        out.y1 = ch[n - 1].y1;
        return out;
    }

    bool state_weights() const { return false; }
    double weight(State, State, const Noise&) const { return 1.0; }
    double noise_weight(const Noise&) const { return 1.0; }
    double payoff(State x) const { return f_(x); }

    const CirParams& params() const { return p_; }
    CirSchemeKind kind() const { return kind_; }

private:
    CirSchemeKind kind_;
    CirParams p_;
    double T_;
    CirPayoff f_;
    StepCache<NvConsts> nv_;
};

// bernoulli_phi_a / bernoulli_phi_b run the Bernoulli composition with the
// phi_A / phi_B variance steps, valid for any sigma.
enum class HestonSchemeKind { nv, ex, bernoulli_nv, bernoulli_ex, bernoulli_phi_a, bernoulli_phi_b };

HestonSchemeKind parse_heston_scheme(const std::string& s);
std::string to_string(HestonSchemeKind k);

struct HestonPayoff {
    enum class Kind { put, asian_put, constant };
    Kind kind = Kind::put;
    double strike = 100.0;
    double c = 0.0;
};

// Log-Heston schemes. With `conditional` set, the Gaussian part of x is kept
// as an accumulated variance and the put payoff is replaced by its
// conditional expectation given the variance path (same mean, lower variance).
class HestonScheme {
public:
    struct State {
        double x, y, i, v;
    };
    struct Noise {
        double nx, gy;
        double y0, y1;
        bool b;
    };
    struct Carry {
        double y;
    };

    HestonScheme(HestonSchemeKind kind, const HestonParams& p, double T, HestonPayoff f, bool conditional = false);

    double maturity() const { return T_; }
    State initial() const { return {p_.x0, p_.cir.x0, 0.0, 0.0}; }
    Carry carry_init() const { return {p_.cir.x0}; }

    bool exact_y() const { return kind_ == HestonSchemeKind::ex || kind_ == HestonSchemeKind::bernoulli_ex; }
    bool uses_bernoulli() const { return kind_ != HestonSchemeKind::nv && kind_ != HestonSchemeKind::ex; }
    bool nv_y() const { return kind_ == HestonSchemeKind::nv || kind_ == HestonSchemeKind::bernoulli_nv; }

    Noise draw_leaf(Rng& rng, double h, Carry& c) const {
        Noise nz{};
        nz.nx = rng.normal();
        if (exact_y()) {
            nz.y0 = c.y;
            nz.y1 = exact_cir_sample(h, c.y, p_.cir, rng);
            c.y = nz.y1;
        } else {
            nz.gy = rng.normal();
        }
        if (uses_bernoulli()) nz.b = rng.bernoulli();
        return nz;
    }
    Noise draw_inner(Rng& rng) const {
        Noise nz{};
        if (uses_bernoulli()) nz.b = rng.bernoulli();
        return nz;
    }

    State step(const State& s, double h, const Noise& nz) const {
        double y1;
        if (exact_y())
            y1 = nz.y1;
        else if (nv_y())
            y1 = nv_step_fast(s.y, nz.gy, nv_.get(h, [&](double hh) { return make_nv_consts(hh, p_.cir); }));
        else if (kind_ == HestonSchemeKind::bernoulli_phi_a)
            y1 = general_second_order_step_A(s.y, h, standard_normal_cdf(nz.gy), p_.cir);
        else
            y1 = second_order_step_B(s.y, h, nz.gy, p_.cir);
        XIncrement inc = x_increment(s.y, y1, h, p_);
        if (uses_bernoulli()) inc.var = (1.0 - p_.rho * p_.rho) * h * std::max(0.0, nz.b ? y1 : s.y);
        State out = s;
        out.y = y1;
        if (conditional_) {
            out.x = s.x + inc.drift;
            out.v = s.v + inc.var;
        } else {
            out.x = s.x + inc.drift + std::sqrt(inc.var) * nz.nx;
        }
        if (asian_) out.i = asian_update({s.x, s.y, s.i}, s.x, out.x, h).i;
        return out;
    }

    Noise aggregate(const Noise& own, const Noise* ch, const double* w, int n, CouplingKind c) const {
        if (n == 1) return ch[0];
        Noise out = own;
        double gx[kMaxRefine];
        double sg = 0.0;
        for (int k = 0; k < n; ++k) {
            gx[k] = ch[k].nx;
            sg += ch[k].gy;
        }
        out.gy = sg / std::sqrt(static_cast<double>(n));
        out.nx = c == CouplingKind::volatility_weighted ? coupling_vol_weighted(gx, w, n) : coupling_standard(gx, n);
        out.y0 = ch[0].y0;
        out.y1 = ch[n - 1].y1;
        return out;
    }

    bool state_weights() const { return !exact_y(); }
    double weight(const State& a, const State& b, const Noise&) const { return a.y + b.y; }
    double noise_weight(const Noise& nz) const { return nz.y0 + nz.y1; }

    double payoff(const State& s) const {
        switch (f_.kind) {
            case HestonPayoff::Kind::put:
                return disc_ * (conditional_ ? gaussian_put(s.x, s.v, f_.strike) : payoff_put(s.x, f_.strike));
            case HestonPayoff::Kind::asian_put: return disc_ * payoff_asian_put(s.i, T_, f_.strike);
            case HestonPayoff::Kind::constant: return f_.c;
        }
        return 0.0;
    }

    // Controls with exact expectations under the scheme: (x - x0, (x - x0)^2)
    // for the put, (I, I^2) with I the running integral for the Asian put. The Bernoulli draw
    // leaves the first two moments of x unchanged, not E[e^x].
    bool has_control() const {
        if (!exact_y() && !nv_y()) return false;
        if (f_.kind == HestonPayoff::Kind::put) return true;
        return f_.kind == HestonPayoff::Kind::asian_put && !uses_bernoulli();
    }
    ControlVec controls(const State& s) const {
        if (asian_) return {s.i, s.i * s.i};
        // conditional mode carries the mean m and variance v of x: E[(x - x0)^2 | Y] = (m - x0)^2 + v
        double d = s.x - p_.x0;
        return {d, d * d + s.v};
    }
    ControlVec control_expectation(const std::vector<double>& steps) const;

    const HestonParams& params() const { return p_; }

private:
    HestonSchemeKind kind_;
    HestonParams p_;
    double T_;
    HestonPayoff f_;
    bool conditional_;
    bool asian_;
    double disc_;
    StepCache<NvConsts> nv_;
};

// Multifactor Heston Strang scheme (NV inner step).
class MultifactorScheme {
public:
    struct State {
        MfState m;
        double v;
    };
    struct Noise {
        double nx, gy;
    };
    struct Carry {};

    MultifactorScheme(const HestonParams& p, const KernelNodes& nodes, double T, HestonPayoff f,
                      bool conditional = false);

    double maturity() const { return T_; }
    State initial() const { return {mf_initial_state(p_.x0, p_.cir.x0, nodes_), 0.0}; }
    Carry carry_init() const { return {}; }

    Noise draw_leaf(Rng& rng, double, Carry&) const {
        Noise nz;
        nz.nx = rng.normal();
        nz.gy = rng.normal();
        return nz;
    }
    Noise draw_inner(Rng&) const { return Noise{0.0, 0.0}; }

    State step(const State& s, double h, const Noise& nz) const {
        const double* decay = decay_.get(h, [&](double hh) {
            std::array<double, kMaxFactors> d{};
            for (int k = 0; k < nodes_.d(); ++k) d[k] = std::exp(-0.5 * nodes_.rhos[k] * hh);
            return d;
        }).data();
        State out;
        double var = 0.0;
        out.m = mf_step_fast(s.m, h, conditional_ ? 0.0 : nz.nx, nz.gy, inner_, nodes_, decay, k0_, &var);
        out.v = s.v + (conditional_ ? var : 0.0);
        if (asian_) out.m.i = asian_update({s.m.x, 0.0, s.m.i}, s.m.x, out.m.x, h).i;
        return out;
    }

    Noise aggregate(const Noise&, const Noise* ch, const double* w, int n, CouplingKind c) const {
        if (n == 1) return ch[0];
        double gx[kMaxRefine];
        double sg = 0.0;
        for (int k = 0; k < n; ++k) {
            gx[k] = ch[k].nx;
            sg += ch[k].gy;
        }
        Noise out;
        out.gy = sg / std::sqrt(static_cast<double>(n));
        out.nx = c == CouplingKind::volatility_weighted ? coupling_vol_weighted(gx, w, n) : coupling_standard(gx, n);
        return out;
    }

    bool state_weights() const { return true; }
    double weight(const State& a, const State& b, const Noise&) const {
        return mf_variance(a.m, nodes_) + mf_variance(b.m, nodes_);
    }
    double noise_weight(const Noise&) const { return 1.0; }

    double payoff(const State& s) const {
        switch (f_.kind) {
            case HestonPayoff::Kind::put:
                return disc_ * (conditional_ ? gaussian_put(s.m.x, s.v, f_.strike) : payoff_put(s.m.x, f_.strike));
            case HestonPayoff::Kind::asian_put: return disc_ * payoff_asian_put(s.m.i, T_, f_.strike);
            case HestonPayoff::Kind::constant: return f_.c;
        }
        return 0.0;
    }

    const KernelNodes& nodes() const { return nodes_; }

private:
    HestonParams p_;
    HestonParams inner_;
    KernelNodes nodes_;
    double k0_;
    double T_;
    HestonPayoff f_;
    bool conditional_;
    bool asian_;
    double disc_;
    StepCache<std::array<double, kMaxFactors>> decay_;
};

}  // namespace wb
