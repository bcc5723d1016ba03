#include "weakboost/random_grids.hpp"

#include <cmath>

namespace wb {

void GridPlan::validate() const {
    if (n < 1) throw std::invalid_argument("grid plan: n must be >= 1");
    if (level < 1 || level > 3) throw std::invalid_argument("grid plan: level must be 1, 2 or 3");
    auto in_range = [&](int k) { return k >= 0 && k < n; };
    if (level >= 2 && (!kappa || !in_range(*kappa))) throw std::invalid_argument("grid plan: kappa missing");
    if (level >= 3 && (!kappa_prime || !in_range(*kappa_prime)))
        throw std::invalid_argument("grid plan: kappa' missing");
    if (level >= 3 && n >= 2 && !pair) throw std::invalid_argument("grid plan: pair missing");
    if (pair && !(pair->first >= 0 && pair->first < pair->second && pair->second < n))
        throw std::invalid_argument("grid plan: pair must satisfy 0 <= k1 < k2 < n");
    if (level < 3 && (kappa_prime || pair)) throw std::invalid_argument("grid plan: extra fields for level");
    if (level < 2 && kappa) throw std::invalid_argument("grid plan: kappa given for level 1");
}

int pair_count(int n) { return n * (n - 1) / 2; }

std::pair<int, int> pair_from_index(int n, int m) {
    for (int i = 0; i < n - 1; ++i) {
        int row = n - 1 - i;
        if (m < row) return {i, i + 1 + m};
        m -= row;
    }
    throw std::out_of_range("pair index out of range");
}

GridPlan draw_grid(int n, int level, Rng& rng) {
    if (n < 1) throw std::invalid_argument("draw_grid: n must be >= 1");
    GridPlan g;
    g.n = n;
    g.level = level;
    if (level >= 2) g.kappa = static_cast<int>(rng.below(n));
    if (level >= 3) {
        g.kappa_prime = static_cast<int>(rng.below(n));
        if (n >= 2) g.pair = pair_from_index(n, static_cast<int>(rng.below(pair_count(n))));
    }
    return g;
}

double coupling_standard(const double* fine, int n) {
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += fine[k];
    return s / std::sqrt(static_cast<double>(n));
}

double coupling_vol_weighted(const double* fine, const double* weights, int n) {
    double num = 0.0, den = 0.0;
    for (int k = 0; k < n; ++k) {
        double w = std::max(0.0, weights[k]);
        num += std::sqrt(w) * fine[k];
        den += w;
    }
    if (!(den > 0.0)) return coupling_standard(fine, n);
    return num / std::sqrt(den);
}

std::pair<uint64_t, uint64_t> allocate_samples(double s2, double s4, double g, double zeta, double eps,
                                               SampleLayout mode) {
    if (!(eps > 0.0)) throw std::invalid_argument("allocate_samples: epsilon must be > 0");
    if (s2 < 0.0 || s4 < 0.0) throw std::invalid_argument("allocate_samples: negative variance");
    double e2 = eps * eps;
    auto up = [](double v) { return static_cast<uint64_t>(std::ceil(std::max(0.0, v) - 1e-12)); };
    if (mode == SampleLayout::independent) {
        double a = std::sqrt(s2), b = std::sqrt(s4), rz = std::sqrt(zeta);
        return {up((s2 + rz * a * b) / e2), up((s4 + a * b / rz) / e2)};
    }
    double c = s2 + 2.0 * g;
    double d = s4 + 2.0 * g;
    if (!(zeta > 1.0)) throw std::invalid_argument("allocate_samples: shared mode needs zeta > 1");
    if (zeta * c >= d) {
        double m1 = (c + std::sqrt(std::max(0.0, c * s4 * (zeta - 1.0)))) / e2;
        double m2 = (s4 + std::sqrt(std::max(0.0, c * s4 / (zeta - 1.0)))) / e2;
        return {up(m1), up(m2)};
    }
    // Otherwise each correction sample already carries its own f(X^{n,0}), so
    // the base term costs nothing extra and M1 = M2.
    uint64_t m = up((s2 + s4 + 2.0 * g) / e2);
    return {m, m};
}

}  // namespace wb
