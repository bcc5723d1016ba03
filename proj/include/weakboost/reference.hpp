#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "weakboost/cir.hpp"
#include "weakboost/heston.hpp"
#include "weakboost/multifactor.hpp"

namespace wb {

struct PutSpec {
    double strike = 100.0;
    double maturity = 1.0;

    void validate() const;
};

class IntegrationError : public std::runtime_error {
public:
    explicit IntegrationError(const std::string& what) : std::runtime_error(what) {}
};

// E[exp(-lambda X_t^x)] for the CIR process.
double cir_laplace(double lambda, double t, double x, const CirParams& p);

// E[exp(z X_T)] for complex z, log-Heston started at (p.x0, p.cir.x0).
std::complex<double> heston_log_mgf(std::complex<double> z, double T, const HestonParams& p);

double heston_call_fourier(const HestonParams& p, const PutSpec& spec);
double heston_put_fourier(const HestonParams& p, const PutSpec& spec);

// Multifactor model with all factors starting at 0. The affine exponent solves
// psi_k' = -rho_k psi_k + gamma_k R(S), phi' = z (r - delta) + a S + y R(S),
// S = sum psi_k, R(S) = (z^2 - z)/2 + (rho sigma z - b) S + sigma^2 S^2 / 2,
// integrated with RK4 over `ode_steps` steps.
std::complex<double> mf_log_mgf(std::complex<double> z, double T, const HestonParams& p, const KernelNodes& nodes,
                                int ode_steps);
double mf_put_fourier(const HestonParams& p, const KernelNodes& nodes, const PutSpec& spec, int ode_steps = 4000);

// Put price from the forward transform M(z) = E[exp(z X_T)] (call by Fourier
// inversion, put by parity with the forward M(1)).
double put_from_mgf(const std::function<std::complex<double>(std::complex<double>)>& mgf, double r,
                    const PutSpec& spec);

// ---------------------------------------------------------------------------
// Exact expectations of the discrete schemes. A variance step maps
// exp(-L y') to exp(log_a - l_prev y) in conditional expectation, so the
// law of the schemes can be propagated backward through a step sequence.

struct AffineStep {
    std::complex<double> l_prev;
    std::complex<double> log_a;
};

AffineStep nv_affine_step(std::complex<double> L, double h, const CirParams& p);
AffineStep exact_affine_step(std::complex<double> L, double h, const CirParams& p);
AffineStep poisson_affine_step(std::complex<double> L, double h, const CirParams& p);

enum class VarianceStep { nv, exact, poisson };

// E[exp(-lambda Y)] after the given CIR step sequence.
double cir_scheme_laplace(double lambda, const std::vector<double>& steps, const CirParams& p, VarianceStep kind);

// E[exp(z X)] after the log-Heston scheme ran over `steps` (trapezoidal x increment).
std::complex<double> heston_scheme_mgf(std::complex<double> z, const std::vector<double>& steps, const HestonParams& p,
                                       VarianceStep kind);

// E[exp(sum_j z_j (X_{j+1} - X_j))] over the step sequence.
std::complex<double> heston_scheme_path_mgf(const std::vector<std::complex<double>>& z, const std::vector<double>& steps,
                                            const HestonParams& p, VarianceStep kind);

// E[X] of the log-Heston scheme on the uniform n-step grid over [0, T].
double heston_scheme_mean_x(int n, double T, const HestonParams& p, VarianceStep kind);

// Weighted grids whose signed sum gives the order-nu random-grid operator on
// n coarse steps: P^{nu,n} f = sum_w w * E[f(scheme on steps)].
std::vector<std::pair<double, std::vector<double>>> boosted_grids(int n, int level, double T);

double cir_boosted_laplace(double lambda, int n, int level, double T, const CirParams& p, VarianceStep kind);
double heston_boosted_put(const HestonParams& p, const PutSpec& spec, int n, int level, VarianceStep kind);

double payoff_put(double x_log, double strike);
double payoff_asian_put(double i, double T, double strike);

// E[(K - e^Z)^+] for Z ~ N(m, v).
double gaussian_put(double m, double v, double strike);

}  // namespace wb
