#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace wb {

// Philox4x32-10 block function.
std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key);

// Counter-based stream addressed by (seed, stream, index). Every Monte Carlo
// sample owns its own Rng, so sample i draws the same numbers no matter how
// the sample range is split between workers.
class Rng {
public:
    using result_type = uint64_t;

    Rng(uint64_t seed, uint32_t stream, uint64_t index);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (pos_ == 2) refill();
        return buf_[pos_++];
    }

    double uniform();  // open interval (0, 1)
    double normal() { return normal_(*this); }
    double gamma(double shape, double scale);
    uint64_t poisson(double mean);
    bool bernoulli() { return ((*this)() >> 63) != 0; }
    uint64_t below(uint64_t n);  // uniform on {0, ..., n-1}

private:
    void refill();

    std::array<uint32_t, 4> ctr_;
    std::array<uint32_t, 2> key_;
    std::array<uint64_t, 2> buf_{};
    int pos_ = 2;
    boost::random::normal_distribution<double> normal_;  // ziggurat
};

}  // namespace wb
