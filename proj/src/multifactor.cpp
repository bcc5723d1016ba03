#include "weakboost/multifactor.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wb {

double KernelNodes::k0() const {
    double s = 0.0;
    for (double g : gammas) s += g;
    return s;
}

void KernelNodes::validate() const {
    if (gammas.size() != rhos.size()) throw std::invalid_argument("kernel: gammas and rhos differ in length");
    if (gammas.empty() || d() > kMaxFactors) throw std::invalid_argument("kernel: factor count out of range");
    for (int k = 0; k < d(); ++k)
        if (!(gammas[k] >= 0.0) || !(rhos[k] >= 0.0)) throw std::invalid_argument("kernel: negative node or weight");
    if (!(k0() > 0.0)) throw std::invalid_argument("kernel: K(0) must be positive");
}

KernelNodes bl2_nodes() {
    return {{0.80386099, 1.60786461, 8.80775525}, {0.08399474, 5.64850577, 118.00624702}};
}

KernelNodes load_kernel_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open kernel file " + path);
    KernelNodes nodes;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line.find("rho") != std::string::npos) continue;
        }
        std::istringstream ls(line);
        std::string k, rho, gamma;
        if (!std::getline(ls, k, ',') || !std::getline(ls, rho, ',') || !std::getline(ls, gamma, ','))
            throw std::runtime_error("kernel file: malformed line '" + line + "'");
        nodes.rhos.push_back(std::stod(rho));
        nodes.gammas.push_back(std::stod(gamma));
    }
    nodes.validate();
    return nodes;
}

double kernel_eval(const KernelNodes& nodes, double t) {
    double s = 0.0;
    for (int k = 0; k < nodes.d(); ++k) s += nodes.gammas[k] * std::exp(-nodes.rhos[k] * t);
    return s;
}

MfState mf_initial_state(double x, double y_level, const KernelNodes& nodes) {
    MfState s;
    s.x = x;
    s.y_level = y_level;
    s.d = nodes.d();
    return s;
}

double mf_variance(const MfState& s, const KernelNodes& nodes) {
    double v = s.y_level;
    for (int k = 0; k < s.d; ++k) v += nodes.gammas[k] * s.factors[k];
    return v;
}

MfState psi1_flow(double t, const MfState& s, const KernelNodes& nodes) {
    MfState out = s;
    for (int k = 0; k < s.d; ++k) out.factors[k] = s.factors[k] * std::exp(-nodes.rhos[k] * t);
    return out;
}

std::array<double, kMaxFactors> remap_Ay(const MfState& before, double y_prime_before, double y_prime_after,
                                         const KernelNodes& nodes) {
    std::array<double, kMaxFactors> f = before.factors;
    double shift = (y_prime_after - y_prime_before) / nodes.k0();
    for (int k = 0; k < before.d; ++k) f[k] += shift;
    return f;
}

CirParams mf_inner_cir(const CirParams& c, const KernelNodes& nodes) {
    double k0 = nodes.k0();
    CirParams in = c;
    in.a = c.a * k0;
    in.b = c.b * k0;
    in.sigma = c.sigma * k0;
    return in;
}

void require_mf_regime(const HestonParams& p, const KernelNodes& nodes) {
    double lhs = nodes.k0() * p.cir.sigma * p.cir.sigma;
    if (!(lhs < 4.0 * p.cir.a)) {
        std::ostringstream os;
        os << "multifactor step: K(0) sigma^2 = " << lhs << " is not below 4a = " << 4.0 * p.cir.a;
        throw RegimeError(os.str());
    }
}

MfState mf_step_fast(const MfState& s, double t, double gaussian_x, double gaussian_y, const HestonParams& inner,
                     const KernelNodes& nodes, const double* half_decay, double k0, double* var_out) {
    MfState m = s;
    double yp = s.y_level;
    for (int k = 0; k < s.d; ++k) {
        m.factors[k] *= half_decay[k];
        yp += nodes.gammas[k] * m.factors[k];
    }
    yp = std::max(0.0, yp);
    double y_hat = nv_flow_composition(yp, t, std::sqrt(t) * gaussian_y, inner.cir);
    auto inc = x_increment(yp, y_hat, t, inner);
    m.x = s.x + inc.drift + std::sqrt(inc.var) * gaussian_x;
    if (var_out) *var_out = inc.var;
    double shift = (y_hat - yp) / k0;
    for (int k = 0; k < s.d; ++k) m.factors[k] = (m.factors[k] + shift) * half_decay[k];
    return m;
}

MfState mf_step(const MfState& s, double t, double gaussian_x, double gaussian_y, const HestonParams& p,
                const KernelNodes& nodes) {
    require_mf_regime(p, nodes);
    if (t == 0.0) return s;
    HestonParams inner = p;
    inner.cir = mf_inner_cir(p.cir, nodes);
    std::array<double, kMaxFactors> decay{};
    for (int k = 0; k < s.d; ++k) decay[k] = std::exp(-0.5 * nodes.rhos[k] * t);
    return mf_step_fast(s, t, gaussian_x, gaussian_y, inner, nodes, decay.data(), nodes.k0());
}

}  // namespace wb
