#pragma once

#include <array>
#include <string>
#include <vector>

#include "weakboost/heston.hpp"

namespace wb {

inline constexpr int kMaxFactors = 8;

// K(t) = sum_k gamma_k exp(-rho_k t).
struct KernelNodes {
    std::vector<double> gammas;
    std::vector<double> rhos;

    int d() const { return static_cast<int>(gammas.size()); }
    double k0() const;
    void validate() const;
};

// Three-factor BL2 nodes for H = 0.1.
KernelNodes bl2_nodes();

// CSV with header "k,rho,gamma".
KernelNodes load_kernel_csv(const std::string& path);

double kernel_eval(const KernelNodes& nodes, double t);

struct MfState {
    double x = 0.0;
    double y_level = 0.0;  // the constant y of the variance y + sum gamma_k Y^k
    int d = 0;
    std::array<double, kMaxFactors> factors{};
    double i = 0.0;  // running integral of e^x (Asian mode)
};

MfState mf_initial_state(double x, double y_level, const KernelNodes& nodes);

double mf_variance(const MfState& s, const KernelNodes& nodes);

MfState psi1_flow(double t, const MfState& s, const KernelNodes& nodes);

// Factor vector shifted by (y_after - y_before) / K(0).
std::array<double, kMaxFactors> remap_Ay(const MfState& before, double y_prime_before, double y_prime_after,
                                         const KernelNodes& nodes);

// CIR block of the frozen-kernel log-Heston SDE: (a K0, b K0, sigma K0).
CirParams mf_inner_cir(const CirParams& c, const KernelNodes& nodes);

void require_mf_regime(const HestonParams& p, const KernelNodes& nodes);

// Strang step psi1(t/2) o (NV log-Heston step on (x, y') + remap) o psi1(t/2).
// `p.cir` holds the original (a, b, sigma); `inner` must be mf_inner_cir(p.cir).
MfState mf_step(const MfState& s, double t, double gaussian_x, double gaussian_y, const HestonParams& p,
                const KernelNodes& nodes);

// Same step with precomputed factor decays exp(-rho_k t/2) and inner params.
MfState mf_step_fast(const MfState& s, double t, double gaussian_x, double gaussian_y, const HestonParams& inner,
                     const KernelNodes& nodes, const double* half_decay, double k0, double* var_out = nullptr);

}  // namespace wb
