#include "weakboost/reference.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <vector>

namespace wb {

using cd = std::complex<double>;

void PutSpec::validate() const {
    if (!(strike > 0.0) || !(maturity > 0.0)) throw std::invalid_argument("put needs positive strike and maturity");
}

double cir_laplace(double lambda, double t, double x, const CirParams& p) {
    double s2 = p.sigma * p.sigma;
    double den = 1.0 + 0.5 * lambda * s2 * psi(p.b, t);
    return std::pow(den, -2.0 * p.a / s2) * std::exp(-lambda * x * std::exp(-p.b * t) / den);
}

cd heston_log_mgf(cd z, double T, const HestonParams& p) {
    const auto& c = p.cir;
    double s2 = c.sigma * c.sigma;
    cd beta = c.b - p.rho * c.sigma * z;
    cd d = std::sqrt(beta * beta - s2 * (z * z - z));
    cd g = (beta - d) / (beta + d);
    cd e = std::exp(-d * T);
    cd A = (c.a / s2) * ((beta - d) * T - 2.0 * std::log((1.0 - g * e) / (1.0 - g)));
    cd B = (beta - d) / s2 * (1.0 - e) / (1.0 - g * e);
    return std::exp(z * (p.x0 + (p.r - p.delta) * T) + A + B * c.x0);
}

namespace {

// C = e^{-rT} [ (M(1) - K)/2 + 1/pi int_0^inf Re[e^{-iuk} (M(iu + 1) - K M(iu)) / (iu)] du ]
double call_from_mgf(const std::function<cd(cd)>& mgf, double r, const PutSpec& spec) {
    double T = spec.maturity, K = spec.strike, k = std::log(K);
    double fwd = mgf(cd(1.0, 0.0)).real();
    auto integrand = [&](double u) {
        if (u < 1e-12) u = 1e-12;
        cd iu(0.0, u);
        cd val = std::exp(-iu * k) * (mgf(iu + 1.0) - K * mgf(iu)) / iu;
        return val.real();
    };
    double total = 0.0, lo = 0.0, width = 2.0;
    int quiet = 0;
    const double tail_tol = 1e-10;
    for (int panel = 0; panel < 4000; ++panel) {
        double err = 0.0;
        double part = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, lo, lo + width, 8,
                                                                                    1e-13, &err);
        total += part;
        lo += width;
        if (std::fabs(part) < tail_tol * std::max(1.0, std::fabs(total))) {
            if (++quiet >= 3) return std::exp(-r * T) * (0.5 * (fwd - K) + total / std::numbers::pi);
        } else {
            quiet = 0;
        }
        if (panel % 10 == 9) width *= 1.5;
    }
    std::ostringstream os;
    os << "Fourier integral did not converge up to u = " << lo << " (last total " << total << ")";
    throw IntegrationError(os.str());
}

}  // namespace

double heston_call_fourier(const HestonParams& p, const PutSpec& spec) {
    spec.validate();
    double S = std::exp(p.x0), T = spec.maturity;
    if (p.cir.a == 0.0 && p.cir.x0 == 0.0) {
        double fwd = S * std::exp((p.r - p.delta) * T);
        return std::exp(-p.r * T) * std::max(fwd - spec.strike, 0.0);
    }
    return call_from_mgf([&](cd z) { return heston_log_mgf(z, T, p); }, p.r, spec);
}

double heston_put_fourier(const HestonParams& p, const PutSpec& spec) {
    double T = spec.maturity;
    double call = heston_call_fourier(p, spec);
    return call - std::exp(p.x0 - p.delta * T) + spec.strike * std::exp(-p.r * T);
}

cd mf_log_mgf(cd z, double T, const HestonParams& p, const KernelNodes& nodes, int ode_steps) {
    const auto& c = p.cir;
    const int d = nodes.d();
    const double s2 = c.sigma * c.sigma;
    const cd quad = 0.5 * (z * z - z);
    const cd lin = p.rho * c.sigma * z - c.b;
    std::vector<cd> psi(d, 0.0), k1(d), k2(d), k3(d), k4(d), tmp(d);
    cd phi = 0.0;
    auto rhs = [&](const std::vector<cd>& y, std::vector<cd>& dy) {
        cd S = 0.0;
        for (int k = 0; k < d; ++k) S += y[k];
        cd R = quad + lin * S + 0.5 * s2 * S * S;
        for (int k = 0; k < d; ++k) dy[k] = -nodes.rhos[k] * y[k] + nodes.gammas[k] * R;
        return z * (p.r - p.delta) + c.a * S + c.x0 * R;
    };
    double h = T / ode_steps;
    for (int s = 0; s < ode_steps; ++s) {
        cd f1 = rhs(psi, k1);
        for (int k = 0; k < d; ++k) tmp[k] = psi[k] + 0.5 * h * k1[k];
        cd f2 = rhs(tmp, k2);
        for (int k = 0; k < d; ++k) tmp[k] = psi[k] + 0.5 * h * k2[k];
        cd f3 = rhs(tmp, k3);
        for (int k = 0; k < d; ++k) tmp[k] = psi[k] + h * k3[k];
        cd f4 = rhs(tmp, k4);
        for (int k = 0; k < d; ++k) psi[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
        phi += h / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
    }
    return std::exp(z * p.x0 + phi);
}

double mf_put_fourier(const HestonParams& p, const KernelNodes& nodes, const PutSpec& spec, int ode_steps) {
    spec.validate();
    nodes.validate();
    double S = std::exp(p.x0), T = spec.maturity;
    double call = call_from_mgf([&](cd z) { return mf_log_mgf(z, T, p, nodes, ode_steps); }, p.r, spec);
    return call - S * std::exp(-p.delta * T) + spec.strike * std::exp(-p.r * T);
}

double put_from_mgf(const std::function<cd(cd)>& mgf, double r, const PutSpec& spec) {
    spec.validate();
    double fwd = mgf(cd(1.0, 0.0)).real();
    return call_from_mgf(mgf, r, spec) - std::exp(-r * spec.maturity) * (fwd - spec.strike);
}

AffineStep nv_affine_step(cd L, double h, const CirParams& p) {
    // X0(h/2) o X1 o X0(h/2) with E exp(-mu (sqrt z + s N)^2) = Q^{-1/2} exp(-mu z / Q), Q = 1 + 2 mu s^2
    double e = std::exp(-0.5 * p.b * h);
    double shift = psi(p.b, 0.5 * h) * (p.a - 0.25 * p.sigma * p.sigma);
    double s2 = 0.25 * p.sigma * p.sigma * h;
    cd mu = L * e;
    cd Q = 1.0 + 2.0 * mu * s2;
    cd mq = mu / Q;
    return {mq * e, -L * shift - 0.5 * std::log(Q) - mq * shift};
}

AffineStep exact_affine_step(cd L, double h, const CirParams& p) {
    double s2 = p.sigma * p.sigma;
    cd den = 1.0 + 0.5 * L * s2 * psi(p.b, h);
    return {L * std::exp(-p.b * h) / den, -(2.0 * p.a / s2) * std::log(den)};
}

AffineStep poisson_affine_step(cd L, double h, const CirParams& p) {
    double s2 = p.sigma * p.sigma;
    double c = 4.0 / (s2 * psi(p.b, h));
    double d = c * std::exp(-p.b * h);
    double v = 2.0 * p.a / s2;
    cd u = std::exp(-2.0 * L / c) - 1.0;
    return {-0.5 * d * (std::exp(u) - 1.0), v * u};
}

namespace {

AffineStep affine_step(VarianceStep kind, cd L, double h, const CirParams& p) {
    switch (kind) {
        case VarianceStep::nv: return nv_affine_step(L, h, p);
        case VarianceStep::exact: return exact_affine_step(L, h, p);
        case VarianceStep::poisson: return poisson_affine_step(L, h, p);
    }
    throw std::invalid_argument("unknown variance step");
}

}  // namespace

double cir_scheme_laplace(double lambda, const std::vector<double>& steps, const CirParams& p, VarianceStep kind) {
    cd L = lambda, log_a = 0.0;
    for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
        auto st = affine_step(kind, L, *it, p);
        L = st.l_prev;
        log_a += st.log_a;
    }
    return std::exp(log_a - L * p.x0).real();
}

cd heston_scheme_path_mgf(const std::vector<cd>& z, const std::vector<double>& steps, const HestonParams& p,
                          VarianceStep kind) {
    // increment j: (r - delta - k a) h + k (y_{j+1} - y_j) + q h (y_j + y_{j+1}) / 2 + Gaussian with
    // variance rho_bar^2 h (y_j + y_{j+1}) / 2; k = rho / sigma, q = k b - 1/2.
    const auto& c = p.cir;
    const int n = static_cast<int>(steps.size());
    if (static_cast<int>(z.size()) != n) throw std::invalid_argument("path mgf: one exponent per step");
    if (n == 0) return 1.0;
    double k = p.rho / c.sigma, q = k * c.b - 0.5, rb2 = 1.0 - p.rho * p.rho;
    auto w = [&](int j) { return (z[j] * q + 0.5 * z[j] * z[j] * rb2) * (0.5 * steps[j]); };
    cd drift = 0.0;
    for (int j = 0; j < n; ++j) drift += z[j] * (p.r - p.delta - k * c.a) * steps[j];
    // the exponent carries -lambda_j y_j
    cd L = -(z[n - 1] * k + w(n - 1));
    cd log_a = 0.0;
    for (int j = n - 1; j >= 0; --j) {
        auto st = affine_step(kind, L, steps[j], c);
        log_a += st.log_a;
        cd coef = -z[j] * k + w(j);
        if (j > 0) coef += z[j - 1] * k + w(j - 1);
        L = st.l_prev - coef;
    }
    return std::exp(drift + log_a - L * c.x0);
}

cd heston_scheme_mgf(cd z, const std::vector<double>& steps, const HestonParams& p, VarianceStep kind) {
    return std::exp(z * p.x0) * heston_scheme_path_mgf(std::vector<cd>(steps.size(), z), steps, p, kind);
}

double heston_scheme_mean_x(int n, double T, const HestonParams& p, VarianceStep kind) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (kind == VarianceStep::poisson) throw std::invalid_argument("poisson variance step not supported here");
    const auto& c = p.cir;
    double h = T / n;
    double k = p.rho / c.sigma, q = k * c.b - 0.5;
    // E[y'] = alpha y + beta
    double alpha = std::exp(-c.b * h);
    double beta = kind == VarianceStep::exact
                      ? c.a * psi(c.b, h)
                      : psi(c.b, 0.5 * h) * (c.a - 0.25 * c.sigma * c.sigma) * (1.0 + std::exp(-0.5 * c.b * h)) +
                            0.25 * c.sigma * c.sigma * h * std::exp(-0.5 * c.b * h);
    double y = c.x0, mean = p.x0;
    for (int j = 0; j < n; ++j) {
        double y1 = alpha * y + beta;
        mean += (p.r - p.delta - k * c.a) * h + k * (y1 - y) + q * h * 0.5 * (y + y1);
        y = y1;
    }
    return mean;
}

std::vector<std::pair<double, std::vector<double>>> boosted_grids(int n, int level, double T) {
    if (n < 1 || level < 1 || level > 3) throw std::invalid_argument("boosted_grids: bad n or level");
    const double h = T / n;
    auto grid = [&](int r1, int r2, int kappa, int kappa_prime) {
        std::vector<double> g;
        for (int j = 0; j < n; ++j) {
            if (j != r1 && j != r2) {
                g.push_back(h);
                continue;
            }
            for (int c = 0; c < n; ++c) {
                if (j == kappa && c == kappa_prime) {
                    for (int e = 0; e < n; ++e) g.push_back(h / n / n);
                } else {
                    g.push_back(h / n);
                }
            }
        }
        return g;
    };
    std::vector<std::pair<double, std::vector<double>>> out;
    out.push_back({1.0, grid(-1, -1, -1, -1)});
    if (level >= 2) {
        // n * E[f1 - f0] with kappa uniform
        for (int k = 0; k < n; ++k) {
            out.push_back({1.0, grid(k, -1, -1, -1)});
            out.push_back({-1.0, grid(-1, -1, -1, -1)});
        }
    }
    if (level >= 3) {
        // n^2 E[f2 - f1] over (kappa, kappa'), n(n-1)/2 E[f5 - f4 - f3 + f0] over pairs
        for (int k = 0; k < n; ++k)
            for (int kp = 0; kp < n; ++kp) {
                out.push_back({1.0, grid(k, -1, k, kp)});
                out.push_back({-1.0, grid(k, -1, -1, -1)});
            }
        for (int k1 = 0; k1 < n; ++k1)
            for (int k2 = k1 + 1; k2 < n; ++k2) {
                out.push_back({1.0, grid(k1, k2, -1, -1)});
                out.push_back({-1.0, grid(k2, -1, -1, -1)});
                out.push_back({-1.0, grid(k1, -1, -1, -1)});
                out.push_back({1.0, grid(-1, -1, -1, -1)});
            }
    }
    return out;
}

double cir_boosted_laplace(double lambda, int n, int level, double T, const CirParams& p, VarianceStep kind) {
    double v = 0.0;
    for (const auto& [w, g] : boosted_grids(n, level, T)) v += w * cir_scheme_laplace(lambda, g, p, kind);
    return v;
}

double heston_boosted_put(const HestonParams& p, const PutSpec& spec, int n, int level, VarianceStep kind) {
    auto grids = boosted_grids(n, level, spec.maturity);
    auto mgf = [&](cd z) {
        cd m = 0.0;
        for (const auto& [w, g] : grids) m += w * heston_scheme_mgf(z, g, p, kind);
        return m;
    };
    return put_from_mgf(mgf, p.r, spec);
}

double payoff_put(double x_log, double strike) { return std::max(strike - std::exp(x_log), 0.0); }

double payoff_asian_put(double i, double T, double strike) { return std::max(strike - i / T, 0.0); }

double gaussian_put(double m, double v, double strike) {
    if (!(v > 0.0)) return std::max(strike - std::exp(m), 0.0);
    double s = std::sqrt(v);
    double d = (std::log(strike) - m) / s;
    return strike * standard_normal_cdf(d) - std::exp(m + 0.5 * v) * standard_normal_cdf(d - s);
}

}  // namespace wb
