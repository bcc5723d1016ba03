#pragma once

#include <cstdint>

#include "weakboost/cir.hpp"

namespace wb {

// dX = (r - delta - Y/2) dt + sqrt(Y) (rho dW + sqrt(1 - rho^2) dB), Y ~ CIR(cir).
struct HestonParams {
    double r = 0.0;
    double delta = 0.0;
    double rho = 0.0;
    CirParams cir;   // cir.x0 is the initial variance y
    double x0 = 0.0; // log-spot

    void validate() const;
};

struct LogHestonState {
    double x = 0.0;
    double y = 0.0;
    double i = 0.0;  // running integral of e^x (Asian mode)
};

// Deterministic part and conditional variance of the one-Gaussian x-update:
// x' = x + drift + sqrt(var) N.
struct XIncrement {
    double drift;
    double var;
};

XIncrement x_increment(double y, double y_next, double t, const HestonParams& p);

LogHestonState ex_step(const LogHestonState& s, double t, double gaussian, double y_next, const HestonParams& p);
LogHestonState nv_step(const LogHestonState& s, double t, double gaussian_x, double gaussian_y, const HestonParams& p);

// Variant where a Bernoulli variable picks which sub-flow runs first, so the
// diffusion of x uses either the start or the end variance.
LogHestonState bernoulli_step(const LogHestonState& s, double t, double gaussian, bool bernoulli, double y_next,
                              const HestonParams& p);
uint64_t bernoulli_clamp_count();
void reset_bernoulli_clamp_count();

// Trapezoid update of the running integral of e^x.
LogHestonState asian_update(const LogHestonState& s, double x_prev, double x_new, double dt);

inline constexpr double kMaxLogPrice = 700.0;

}  // namespace wb
