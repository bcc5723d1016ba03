#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "weakboost/rng.hpp"

namespace wb {

// Raised when a scheme is used outside its validity domain (e.g. sigma^2 > 4a
// for the NV step).
class RegimeError : public std::domain_error {
public:
    explicit RegimeError(const std::string& what) : std::domain_error(what) {}
};

// dX = (a - b X) dt + sigma sqrt(X) dW, X_0 = x0.
struct CirParams {
    double a = 0.0;
    double b = 0.0;
    double sigma = 1.0;
    double x0 = 0.0;

    bool low_vol() const { return sigma * sigma <= 4.0 * a; }
    void validate() const;
};

// (1 - e^{-bt}) / b, equal to t when b = 0.
double psi(double b, double t);

double flow_x0(double t, double x, const CirParams& p);
double flow_x1(double w, double x, double sigma);

// phi(x, t, sqrt(t) N) = X0(t/2, X1(sqrt(t) N, X0(t/2, x))).
double nv_cir_step(double x, double t, double gaussian, const CirParams& p);

// phi(x, t, w) with w the Brownian increment; no regime check. Used by the
// threshold schemes above K2 where the argument stays nonnegative.
// Step-size constants of the NV composition, for hot loops with a fixed h.
struct NvConsts {
    double decay = 1.0;   // exp(-b h/2)
    double shift = 0.0;   // psi_b(h/2) (a - sigma^2/4)
    double noise = 0.0;   // sigma sqrt(h) / 2
};

NvConsts make_nv_consts(double h, const CirParams& p);

inline double nv_step_fast(double x, double gaussian, const NvConsts& c) {
    double z = c.decay * x + c.shift;
    double r = std::sqrt(std::max(0.0, z)) + c.noise * gaussian;
    return std::max(0.0, c.decay * r * r + c.shift);
}

double nv_flow_composition(double x, double t, double w, const CirParams& p);

double threshold_k2(double t, const CirParams& p, double a_y);

// Moment-matching probability pi(t, x) of the two-point lower branch.
double lower_branch_pi(double t, double x, const CirParams& p);

inline constexpr double kSchemeAY_A = 1.7320508075688772;  // sqrt(3)
inline constexpr double kSchemeB_z1 = 2.7523451704710586;
inline constexpr double kSchemeB_z2 = 3.5;
inline constexpr double kSchemeB_c1 = 2.58;
inline constexpr double kSchemeB_c2 = 3.106520327375868;

// Three-point variable above K2(sqrt 3), two-point moment matching below.
// `uniform` in (0,1) drives both branches (u = Phi(N) when coupled to a Gaussian).
double general_second_order_step_A(double x, double t, double uniform, const CirParams& p);

// Truncated-Gaussian variable above K2(3.5); scaled beta law below.
double second_order_step_B(double x, double t, double gaussian, const CirParams& p);
double truncated_gaussian_b(double n);

double exact_cir_sample(double t, double x, const CirParams& p, Rng& rng);

// delta_{j,L}(v) = C(L,j) prod_{q=j}^{L-1} (q + v), j = 0..L.
std::vector<double> moment_coefficients(int L, double v);
double moment_exact(int L, double t, double x, const CirParams& p);

double poisson_first_order_step(double x, double t, const CirParams& p, Rng& rng);

struct HighVolSplit {
    double f0;       // f(0)
    double weight1;  // a psi_b(t)
    double weight2;  // e^{-bt} x
    CirParams p1;    // a + sigma^2/2
    CirParams p2;    // a + sigma^2
};

// E f(X_t^x) = f(0) + weight1 E[Mf(X^1)] + weight2 E[Mf(X^2)],
// Mf(z) = (f(z) - f(0)) / z, X^i exact CIR under p_i started at x.
HighVolSplit high_vol_split(const std::function<double(double)>& f, double t, double x, const CirParams& p);

// (f(z) - f(0)) / z with the derivative at 0 approximated by a one-sided difference.
double divided_difference_at_zero(const std::function<double(double)>& f, double z, double f0);

double standard_normal_cdf(double z);

}  // namespace wb
