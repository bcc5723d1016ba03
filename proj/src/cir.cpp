#include "weakboost/cir.hpp"

#include <cmath>
#include <sstream>

namespace wb {

void CirParams::validate() const {
    if (!(a >= 0.0)) throw std::invalid_argument("CIR parameter a must be >= 0");
    if (!(sigma > 0.0)) throw std::invalid_argument("CIR parameter sigma must be > 0");
    if (!(x0 >= 0.0)) throw std::invalid_argument("CIR start value must be >= 0");
    if (!std::isfinite(b)) throw std::invalid_argument("CIR parameter b must be finite");
}

static void require_low_vol(const CirParams& p, const char* who) {
    if (!p.low_vol()) {
        std::ostringstream os;
        os << who << ": sigma^2 = " << p.sigma * p.sigma << " exceeds 4a = " << 4.0 * p.a;
        throw RegimeError(os.str());
    }
}

double psi(double b, double t) {
    double u = b * t;
    if (std::fabs(u) < 1e-4) {
        // t (1 - u/2 + u^2/6 - u^3/24 + u^4/120 - u^5/720 + u^6/5040)
        double s = 1.0 / 5040.0;
        s = 1.0 / 720.0 - u * s;
        s = 1.0 / 120.0 - u * s;
        s = 1.0 / 24.0 - u * s;
        s = 1.0 / 6.0 - u * s;
        s = 0.5 - u * s;
        s = 1.0 - u * s;
        return t * s;
    }
    return -std::expm1(-u) / b;
}

static double x0_unchecked(double t, double x, const CirParams& p) {
    return std::exp(-p.b * t) * x + psi(p.b, t) * (p.a - 0.25 * p.sigma * p.sigma);
}

double flow_x0(double t, double x, const CirParams& p) {
    require_low_vol(p, "flow_x0");
    return x0_unchecked(t, x, p);
}

double flow_x1(double w, double x, double sigma) {
    double r = std::sqrt(x) + 0.5 * w * sigma;
    return r * r;
}

double nv_flow_composition(double x, double t, double w, const CirParams& p) {
    double z = std::max(0.0, x0_unchecked(0.5 * t, x, p));
    z = flow_x1(w, z, p.sigma);
    return std::max(0.0, x0_unchecked(0.5 * t, z, p));
}

NvConsts make_nv_consts(double h, const CirParams& p) {
    NvConsts c;
    c.decay = std::exp(-0.5 * p.b * h);
    c.shift = psi(p.b, 0.5 * h) * (p.a - 0.25 * p.sigma * p.sigma);
    c.noise = 0.5 * p.sigma * std::sqrt(h);
    return c;
}

double nv_cir_step(double x, double t, double gaussian, const CirParams& p) {
    require_low_vol(p, "nv_cir_step");
    if (t == 0.0) return x;
    return nv_flow_composition(x, t, std::sqrt(t) * gaussian, p);
}

double threshold_k2(double t, const CirParams& p, double a_y) {
    if (p.low_vol() || t <= 0.0) return 0.0;
    double e = std::exp(0.5 * p.b * t);
    double c = (0.25 * p.sigma * p.sigma - p.a) * psi(p.b, 0.5 * t);
    double r = std::sqrt(e * c) + 0.5 * p.sigma * a_y * std::sqrt(t);
    return e * (c + r * r);
}

double lower_branch_pi(double t, double x, const CirParams& p) {
    double m1 = moment_exact(1, t, x, p);
    double m2 = moment_exact(2, t, x, p);
    if (!(m2 > 0.0)) return 0.0;
    double q = 1.0 - m1 * m1 / m2;
    return 0.5 * (1.0 - std::sqrt(std::max(0.0, q)));
}

double general_second_order_step_A(double x, double t, double u, const CirParams& p) {
    if (t == 0.0) return x;
    if (x >= threshold_k2(t, p, kSchemeAY_A)) {
        double w = 0.0;
        if (u < 1.0 / 6.0)
            w = -std::sqrt(3.0 * t);
        else if (u >= 5.0 / 6.0)
            w = std::sqrt(3.0 * t);
        return nv_flow_composition(x, t, w, p);
    }
    double m1 = moment_exact(1, t, x, p);
    double pi = lower_branch_pi(t, x, p);
    if (u < 1.0 - pi) return m1 / (2.0 * (1.0 - pi));
    return m1 / (2.0 * pi);
}

double truncated_gaussian_b(double n) {
    if (n <= -kSchemeB_c2) return -kSchemeB_z2;
    if (n <= -kSchemeB_c1) return -kSchemeB_z1;
    if (n < kSchemeB_c1) return n;
    if (n <= kSchemeB_c2) return kSchemeB_z1;
    return kSchemeB_z2;
}

double second_order_step_B(double x, double t, double gaussian, const CirParams& p) {
    if (t == 0.0) return x;
    if (x >= threshold_k2(t, p, kSchemeB_z2))
        return nv_flow_composition(x, t, std::sqrt(t) * truncated_gaussian_b(gaussian), p);
    double m1 = moment_exact(1, t, x, p);
    double pi = lower_branch_pi(t, x, p);
    if (!(pi > 0.0)) return m1;
    double expo = 1.0 / (2.0 * pi) - 1.0;
    return m1 / (2.0 * pi) * std::pow(standard_normal_cdf(gaussian), expo);
}

double exact_cir_sample(double t, double x, const CirParams& p, Rng& rng) {
    if (t <= 0.0) return x;
    double ps = psi(p.b, t);
    double c = 4.0 / (p.sigma * p.sigma * ps);
    double d = c * std::exp(-p.b * t);
    double v = 2.0 * p.a / (p.sigma * p.sigma);
    uint64_t i = rng.poisson(0.5 * d * x);
    double shape = static_cast<double>(i) + v;
    if (shape <= 0.0) return 0.0;  // atom at 0 when a = 0
    return rng.gamma(shape, 2.0 / c);
}

std::vector<double> moment_coefficients(int L, double v) {
    std::vector<double> out(L + 1);
    double binom = 1.0;  // C(L, j)
    for (int j = 0; j <= L; ++j) {
        double prod = 1.0;
        for (int q = j; q < L; ++q) prod *= q + v;
        out[j] = binom * prod;
        binom = binom * (L - j) / (j + 1);
    }
    return out;
}

double moment_exact(int L, double t, double x, const CirParams& p) {
    if (L < 0) throw std::invalid_argument("moment order must be >= 0");
    if (L == 0) return 1.0;
    double v = 2.0 * p.a / (p.sigma * p.sigma);
    auto delta = moment_coefficients(L, v);
    double s = 0.5 * p.sigma * p.sigma * psi(p.b, t);
    double ex = std::exp(-p.b * t) * x;
    double total = 0.0;
    for (int j = 0; j <= L; ++j) total += delta[j] * std::pow(s, L - j) * std::pow(ex, j);
    return total;
}

double poisson_first_order_step(double x, double t, const CirParams& p, Rng& rng) {
    if (t <= 0.0) return x;
    double ps = psi(p.b, t);
    double c = 4.0 / (p.sigma * p.sigma * ps);
    double d = c * std::exp(-p.b * t);
    double v = 2.0 * p.a / (p.sigma * p.sigma);
    uint64_t pp = rng.poisson(0.5 * d * x);
    uint64_t q = rng.poisson(static_cast<double>(pp) + v);
    return 2.0 / c * static_cast<double>(q);
}

HighVolSplit high_vol_split(const std::function<double(double)>& f, double t, double x, const CirParams& p) {
    HighVolSplit s;
    s.f0 = f(0.0);
    s.weight1 = p.a * psi(p.b, t);
    s.weight2 = std::exp(-p.b * t) * x;
    s.p1 = p;
    s.p1.a = p.a + 0.5 * p.sigma * p.sigma;
    s.p2 = p;
    s.p2.a = p.a + p.sigma * p.sigma;
    return s;
}

double divided_difference_at_zero(const std::function<double(double)>& f, double z, double f0) {
    if (z > 1e-8) return (f(z) - f0) / z;
    double h = 1e-6;
    return (f(h) - f0) / h;
}

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.7071067811865476); }

}  // namespace wb
