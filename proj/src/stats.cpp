#include "weakboost/stats.hpp"

#include <cmath>
#include <sstream>

namespace wb {

Estimate make_estimate(double value, double variance, uint64_t n_samples) {
    Estimate e;
    e.value = value;
    e.variance = variance;
    e.n_samples = n_samples;
    e.half_width_95 = n_samples > 0 ? 1.96 * std::sqrt(variance / static_cast<double>(n_samples)) : 0.0;
    return e;
}

void Accumulator::add(double x) {
    ++n_;
    double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
}

void Accumulator::merge(const Accumulator& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
    double n = na + nb;
    double d = o.mean_ - mean_;
    mean_ += d * nb / n;
    m2_ += o.m2_ + d * d * na * nb / n;
    n_ += o.n_;
}

double Accumulator::variance() const {
    return n_ > 1 ? std::max(0.0, m2_ / static_cast<double>(n_ - 1)) : 0.0;
}

Accumulator Accumulator::from_moments(uint64_t n, double mean, double variance) {
    Accumulator a;
    a.n_ = n;
    a.mean_ = n > 0 ? mean : 0.0;
    a.m2_ = n > 1 ? variance * static_cast<double>(n - 1) : 0.0;
    return a;
}

Estimate Accumulator::estimate() const { return make_estimate(mean_, variance(), n_); }

void PairAccumulator::add(double x, double y) {
    ++n_;
    double n = static_cast<double>(n_);
    double dx = x - mx_, dy = y - my_;
    mx_ += dx / n;
    my_ += dy / n;
    sxx_ += dx * (x - mx_);
    syy_ += dy * (y - my_);
    sxy_ += dx * (y - my_);
}

void PairAccumulator::merge(const PairAccumulator& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
    double n = na + nb;
    double dx = o.mx_ - mx_, dy = o.my_ - my_;
    double w = na * nb / n;
    mx_ += dx * nb / n;
    my_ += dy * nb / n;
    sxx_ += o.sxx_ + dx * dx * w;
    syy_ += o.syy_ + dy * dy * w;
    sxy_ += o.sxy_ + dx * dy * w;
    n_ += o.n_;
}

double PairAccumulator::var_x() const { return n_ > 1 ? std::max(0.0, sxx_ / (n_ - 1.0)) : 0.0; }
double PairAccumulator::var_y() const { return n_ > 1 ? std::max(0.0, syy_ / (n_ - 1.0)) : 0.0; }
double PairAccumulator::cov() const { return n_ > 1 ? sxy_ / (n_ - 1.0) : 0.0; }

static std::string non_finite_message(uint64_t index, double value) {
    std::ostringstream os;
    os << "non-finite sample " << value << " at index " << index;
    return os.str();
}

NonFiniteSample::NonFiniteSample(uint64_t i, double value)
    : std::runtime_error(non_finite_message(i, value)), index(i) {}

int default_workers() {
    unsigned h = std::thread::hardware_concurrency();
    return h == 0 ? 1 : static_cast<int>(h);
}

Estimate run_estimate(const std::function<double(Rng&, uint64_t)>& task, uint64_t samples,
                      uint64_t seed, uint32_t stream, int workers) {
    if (samples < 2) throw std::invalid_argument("run_estimate needs at least 2 samples");
    auto acc = run_chunked<Accumulator>(0, samples, workers, [&](uint64_t b, uint64_t e, Accumulator& a) {
        for (uint64_t i = b; i < e; ++i) {
            Rng rng(seed, stream, i);
            double v = task(rng, i);
            if (!std::isfinite(v)) throw NonFiniteSample(i, v);
            a.add(v);
        }
    });
    return acc.estimate();
}

SlopeFit regress_slope(const std::vector<std::pair<double, double>>& errors) {
    SlopeFit fit;
    for (auto [n, err] : errors) {
        if (!(err > 0.0) || !(n > 0.0)) {
            ++fit.dropped;
            continue;
        }
        fit.points.emplace_back(std::log(1.0 / n), std::log(err));
    }
    if (fit.points.size() < 2) throw std::invalid_argument("slope regression needs at least 2 positive errors");
    double m = static_cast<double>(fit.points.size());
    double sx = 0, sy = 0;
    for (auto [x, y] : fit.points) {
        sx += x;
        sy += y;
    }
    double mx = sx / m, my = sy / m;
    double sxx = 0, sxy = 0;
    for (auto [x, y] : fit.points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    for (auto [x, y] : fit.points) {
        double r = y - fit.intercept - fit.slope * x;
        fit.residual += r * r;
    }
    return fit;
}

}  // namespace wb
