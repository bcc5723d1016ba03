#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "weakboost/rng.hpp"

namespace wb {

struct Estimate {
    double value = 0.0;
    double variance = 0.0;  // per-sample variance; half_width_95 = 1.96 sqrt(variance / n_samples)
    uint64_t n_samples = 0;
    double half_width_95 = 0.0;
};

Estimate make_estimate(double value, double variance, uint64_t n_samples);

// Welford accumulator with a pairwise merge (Chan et al.).
class Accumulator {
public:
    void add(double x);
    void merge(const Accumulator& o);
    uint64_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const;  // unbiased
    Estimate estimate() const;
    static Accumulator from_moments(uint64_t n, double mean, double variance);

private:
    uint64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

// Two-variable version that also tracks the covariance.
class PairAccumulator {
public:
    void add(double x, double y);
    void merge(const PairAccumulator& o);
    uint64_t count() const { return n_; }
    double mean_x() const { return mx_; }
    double mean_y() const { return my_; }
    double var_x() const;
    double var_y() const;
    double cov() const;

private:
    uint64_t n_ = 0;
    double mx_ = 0.0, my_ = 0.0, sxx_ = 0.0, syy_ = 0.0, sxy_ = 0.0;
};

class NonFiniteSample : public std::runtime_error {
public:
    NonFiniteSample(uint64_t index, double value);
    uint64_t index;
};

// Fixed chunk size: the chunk partition, and therefore the merge order, never
// depends on the worker count.
inline constexpr uint64_t kChunk = 1u << 14;

int default_workers();

// Runs body(begin, end, acc) over [first, last) in fixed chunks and merges the
// per-chunk accumulators in chunk order.
template <class Acc, class Body>
Acc run_chunked(uint64_t first, uint64_t last, int workers, Body body) {
    if (last <= first) return Acc{};
    uint64_t n_chunks = (last - first + kChunk - 1) / kChunk;
    std::vector<Acc> parts(n_chunks);
    auto work = [&](uint64_t c0, uint64_t c1) {
        for (uint64_t c = c0; c < c1; ++c) {
            uint64_t b = first + c * kChunk;
            uint64_t e = std::min(last, b + kChunk);
            body(b, e, parts[c]);
        }
    };
    if (workers <= 1 || n_chunks == 1) {
        work(0, n_chunks);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errs(workers);
        uint64_t per = (n_chunks + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            uint64_t c0 = std::min<uint64_t>(n_chunks, w * per);
            uint64_t c1 = std::min<uint64_t>(n_chunks, c0 + per);
            pool.emplace_back([&, w, c0, c1] {
                try {
                    work(c0, c1);
                } catch (...) {
                    errs[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errs)
            if (e) std::rethrow_exception(e);
    }
    Acc total;
    for (auto& p : parts) total.merge(p);
    return total;
}

// Mean of task(rng, i) for i in [0, samples), sample i drawing from
// Rng(seed, stream, i).
Estimate run_estimate(const std::function<double(Rng&, uint64_t)>& task, uint64_t samples,
                      uint64_t seed, uint32_t stream = 0, int workers = 1);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // residual sum of squares
    std::vector<std::pair<double, double>> points;  // (log(1/n), log|err|)
    int dropped = 0;
};

// OLS of log|err| on log(1/n); nonpositive errors are dropped and counted.
SlopeFit regress_slope(const std::vector<std::pair<double, double>>& errors);

}  // namespace wb
