#include "weakboost/schemes.hpp"

#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace wb {

CirSchemeKind parse_cir_scheme(const std::string& s) {
    if (s == "nv") return CirSchemeKind::nv;
    if (s == "phi_a") return CirSchemeKind::phi_a;
    if (s == "phi_b") return CirSchemeKind::phi_b;
    if (s == "exact") return CirSchemeKind::exact;
    if (s == "poisson") return CirSchemeKind::poisson;
    throw std::invalid_argument("unknown CIR scheme '" + s + "'");
}

std::string to_string(CirSchemeKind k) {
    switch (k) {
        case CirSchemeKind::nv: return "nv";
        case CirSchemeKind::phi_a: return "phi_a";
        case CirSchemeKind::phi_b: return "phi_b";
        case CirSchemeKind::exact: return "exact";
        case CirSchemeKind::poisson: return "poisson";
    }
    return "?";
}

CirScheme::CirScheme(CirSchemeKind kind, const CirParams& p, double T, CirPayoff f)
    : kind_(kind), p_(p), T_(T), f_(f) {
    p_.validate();
    if (!(T > 0.0)) throw std::invalid_argument("maturity must be positive");
    if (kind == CirSchemeKind::nv && !p.low_vol())
        throw RegimeError("nv scheme needs sigma^2 <= 4a");
}

HestonSchemeKind parse_heston_scheme(const std::string& s) {
    if (s == "nv") return HestonSchemeKind::nv;
    if (s == "exact" || s == "ex") return HestonSchemeKind::ex;
    if (s == "bernoulli_nv") return HestonSchemeKind::bernoulli_nv;
    if (s == "bernoulli_ex") return HestonSchemeKind::bernoulli_ex;
    if (s == "bernoulli_phi_a" || s == "phi_a") return HestonSchemeKind::bernoulli_phi_a;
    if (s == "bernoulli_phi_b" || s == "phi_b") return HestonSchemeKind::bernoulli_phi_b;
    throw std::invalid_argument("unknown Heston scheme '" + s + "'");
}

std::string to_string(HestonSchemeKind k) {
    switch (k) {
        case HestonSchemeKind::nv: return "nv";
        case HestonSchemeKind::ex: return "exact";
        case HestonSchemeKind::bernoulli_nv: return "bernoulli_nv";
        case HestonSchemeKind::bernoulli_ex: return "bernoulli_ex";
        case HestonSchemeKind::bernoulli_phi_a: return "bernoulli_phi_a";
        case HestonSchemeKind::bernoulli_phi_b: return "bernoulli_phi_b";
    }
    return "?";
}

HestonScheme::HestonScheme(HestonSchemeKind kind, const HestonParams& p, double T, HestonPayoff f, bool conditional)
    : kind_(kind), p_(p), T_(T), f_(f), conditional_(conditional) {
    p_.validate();
    if (!(T > 0.0)) throw std::invalid_argument("maturity must be positive");
    if (nv_y() && !p.cir.low_vol()) throw RegimeError("nv variance step needs sigma^2 <= 4a");
    asian_ = f.kind == HestonPayoff::Kind::asian_put;
    if (asian_ && conditional_) throw std::invalid_argument("conditional sampling applies to the European put only");
    disc_ = std::exp(-p.r * T);
}

ControlVec HestonScheme::control_expectation(const std::vector<double>& steps) const {
    if (!has_control()) throw std::logic_error("no control variate for this payoff");
    VarianceStep vk = exact_y() ? VarianceStep::exact : VarianceStep::nv;
    if (asian_) {
        // I = sum_t w_t e^{x_t} (trapezoid); E[e^{x_s + x_t}] from the path transform
        const int n = static_cast<int>(steps.size());
        std::vector<double> w(n + 1, 0.0);
        for (int j = 0; j < n; ++j) {
            w[j] += 0.5 * steps[j];
            w[j + 1] += 0.5 * steps[j];
        }
        const double s0 = std::exp(p_.x0);
        std::vector<std::complex<double>> z(n);
        double e1 = 0.0, e2 = 0.0;
        for (int t = 0; t <= n; ++t) {
            for (int j = 0; j < n; ++j) z[j] = j < t ? 1.0 : 0.0;
            e1 += w[t] * s0 * heston_scheme_path_mgf(z, steps, p_, vk).real();
            for (int u = t; u <= n; ++u) {
                for (int j = 0; j < n; ++j) z[j] = (j < t ? 1.0 : 0.0) + (j < u ? 1.0 : 0.0);
                double m = s0 * s0 * heston_scheme_path_mgf(z, steps, p_, vk).real();
                e2 += (u == t ? 1.0 : 2.0) * w[t] * w[u] * m;
            }
        }
        return {e1, e2};
    }
    // Taylor coefficients of E[exp(z (x - x0))] at 0 by the trapezoid rule on a circle
    constexpr int kPoints = 32;
    constexpr double kRadius = 0.5;
    std::complex<double> a1 = 0.0, a2 = 0.0;
    for (int j = 0; j < kPoints; ++j) {
        std::complex<double> w = std::polar(1.0, 2.0 * std::numbers::pi * j / kPoints);
        std::complex<double> z = kRadius * w;
        std::complex<double> m = heston_scheme_mgf(z, steps, p_, vk) * std::exp(-z * p_.x0);
        a1 += m / w;
        a2 += m / (w * w);
    }
    a1 /= kPoints * kRadius;
    a2 /= kPoints * kRadius * kRadius;
    return {a1.real(), 2.0 * a2.real()};
}

MultifactorScheme::MultifactorScheme(const HestonParams& p, const KernelNodes& nodes, double T, HestonPayoff f,
                                     bool conditional)
    : p_(p), nodes_(nodes), T_(T), f_(f), conditional_(conditional) {
    p_.validate();
    nodes_.validate();
    if (!(T > 0.0)) throw std::invalid_argument("maturity must be positive");
    require_mf_regime(p_, nodes_);
    inner_ = p_;
    inner_.cir = mf_inner_cir(p_.cir, nodes_);
    k0_ = nodes_.k0();
    asian_ = f.kind == HestonPayoff::Kind::asian_put;
    if (asian_ && conditional_) throw std::invalid_argument("conditional sampling applies to the European put only");
    disc_ = std::exp(-p.r * T);
}

}  // namespace wb
