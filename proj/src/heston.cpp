#include "weakboost/heston.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

namespace wb {

namespace {
std::atomic<uint64_t> g_bernoulli_clamps{0};
}

void HestonParams::validate() const {
    if (!(std::fabs(rho) < 1.0)) throw std::invalid_argument("correlation must satisfy |rho| < 1");
    cir.validate();
}

XIncrement x_increment(double y, double y_next, double t, const HestonParams& p) {
    const auto& c = p.cir;
    double k = p.rho / c.sigma;
    double ybar = 0.5 * (y + y_next);
    double drift = (p.r - p.delta - k * c.a) * t + k * (y_next - y) + (k * c.b - 0.5) * ybar * t;
    return {drift, (1.0 - p.rho * p.rho) * ybar * t};
}

LogHestonState ex_step(const LogHestonState& s, double t, double gaussian, double y_next, const HestonParams& p) {
    auto inc = x_increment(s.y, y_next, t, p);
    LogHestonState out = s;
    out.x = s.x + inc.drift + std::sqrt(inc.var) * gaussian;
    out.y = y_next;
    return out;
}

LogHestonState nv_step(const LogHestonState& s, double t, double gaussian_x, double gaussian_y,
                       const HestonParams& p) {
    double y_next = nv_cir_step(s.y, t, gaussian_y, p.cir);
    return ex_step(s, t, gaussian_x, y_next, p);
}

LogHestonState bernoulli_step(const LogHestonState& s, double t, double gaussian, bool bernoulli, double y_next,
                              const HestonParams& p) {
    auto inc = x_increment(s.y, y_next, t, p);
    double y_used = bernoulli ? y_next : s.y;
    double rad = (1.0 - p.rho * p.rho) * y_used * t;
    if (rad < 0.0) {
        g_bernoulli_clamps.fetch_add(1, std::memory_order_relaxed);
        rad = 0.0;
    }
    LogHestonState out = s;
    out.x = s.x + inc.drift + std::sqrt(rad) * gaussian;
    out.y = y_next;
    return out;
}

uint64_t bernoulli_clamp_count() { return g_bernoulli_clamps.load(); }
void reset_bernoulli_clamp_count() { g_bernoulli_clamps.store(0); }

LogHestonState asian_update(const LogHestonState& s, double x_prev, double x_new, double dt) {
    if (std::fabs(x_prev) > kMaxLogPrice || std::fabs(x_new) > kMaxLogPrice) {
        std::ostringstream os;
        os << "asian_update: e^x overflow for x = " << (std::fabs(x_prev) > kMaxLogPrice ? x_prev : x_new);
        throw std::overflow_error(os.str());
    }
    LogHestonState out = s;
    out.i = s.i + 0.5 * (std::exp(x_prev) + std::exp(x_new)) * dt;
    return out;
}

}  // namespace wb
