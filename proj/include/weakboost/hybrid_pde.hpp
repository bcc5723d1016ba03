#pragma once

#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "weakboost/heston.hpp"
#include "weakboost/reference.hpp"

namespace wb {

// (s, y) -> (log s - (rho/sigma) y, y). Throws on s <= 0 or sigma <= 0.
std::pair<double, double> transform_initial(double s, double y, const HestonParams& p);
double transform_back(double x, double y, const HestonParams& p);  // returns s

// Drift of the decorrelated log-price: r - delta - rho a/sigma + (rho b/sigma - 1/2) y.
double hybrid_mu_x(double y, const HestonParams& p);

// Binomial CIR chain on N steps. Row n holds n+1 nodes.
struct HybridLattice {
    int N = 0;
    double T = 0.0;
    double h = 0.0;
    std::vector<std::vector<double>> y;
    std::vector<std::vector<int>> k_up, k_down;  // rows 0..N-1
    std::vector<std::vector<double>> p_up;       // p_down = 1 - p_up
};

HybridLattice build_lattice(double y0, const CirParams& p, int N, double T);

// Rows of A with sub[i] = A(i, i-1), sup[i] = A(i, i+1).
struct TridiagonalOp {
    std::vector<double> sub, diag, sup;
    int size() const { return static_cast<int>(diag.size()); }
};

// Implicit upwind operator for the frozen-y x-equation on x_count points.
// First and last rows are identity rows (boundary value carried over).
TridiagonalOp assemble_operator(double y, const HestonParams& p, double h, double dx, int x_count);

// Thomas solve of A v = rhs.
std::vector<double> implicit_solve(const TridiagonalOp& op, const std::vector<double>& rhs);
void implicit_solve_into(const TridiagonalOp& op, const double* rhs, double* out, std::vector<double>& scratch);

struct XGrid {
    double center = 0.0;
    double dx = 0.01;
    int half = 0;  // points center + i dx, i in [-half, half]

    int size() const { return 2 * half + 1; }
    double at(int j) const { return center + (j - half) * dx; }
};

// Smallest half-width covering `sd_mult` standard deviations of the terminal x
// (plus drift) under the variance bound of the lattice.
int hybrid_auto_half(const HestonParams& p, double T, double dx, double sd_mult = 10.0);

struct HybridResult {
    XGrid grid;
    std::vector<double> values;  // undiscounted u_0(x, y0) on the grid
    double at_center = 0.0;
};

// Backward induction on the lattice. `payoff` takes (x, y) in transformed coordinates.
HybridResult backward_sweep(const HybridLattice& lat, const HestonParams& p, const XGrid& grid,
                            const std::function<double(double, double)>& payoff, int threads = 1);

struct HybridPutResult {
    double price = 0.0;
    HybridResult surface;
};

// Discounted European put at (S0 = exp(p.x0), y0 = p.cir.x0).
HybridPutResult hybrid_put(const HestonParams& p, const PutSpec& spec, int N, double dx, int half = 0, int threads = 1);

}  // namespace wb
