#include "weakboost/rng.hpp"

namespace wb {

namespace {

constexpr uint32_t kM0 = 0xD2511F53u;
constexpr uint32_t kM1 = 0xCD9E8D57u;
constexpr uint32_t kW0 = 0x9E3779B9u;
constexpr uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
    uint64_t p = static_cast<uint64_t>(a) * b;
    hi = static_cast<uint32_t>(p >> 32);
    lo = static_cast<uint32_t>(p);
}

}  // namespace

std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> c, std::array<uint32_t, 2> k) {
    uint32_t c0 = c[0], c1 = c[1], c2 = c[2], c3 = c[3];
    uint32_t k0 = k[0], k1 = k[1];
    for (int round = 0; round < 10; ++round) {
        uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kM0, c0, hi0, lo0);
        mulhilo(kM1, c2, hi1, lo1);
        c0 = hi1 ^ c1 ^ k0;
        c1 = lo1;
        c2 = hi0 ^ c3 ^ k1;
        c3 = lo0;
        k0 += kW0;
        k1 += kW1;
    }
    return {c0, c1, c2, c3};
}

Rng::Rng(uint64_t seed, uint32_t stream, uint64_t index)
    : ctr_{0u, stream, static_cast<uint32_t>(index), static_cast<uint32_t>(index >> 32)},
      key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)} {}

void Rng::refill() {
    auto out = philox4x32(ctr_, key_);
    ++ctr_[0];
    buf_[0] = (static_cast<uint64_t>(out[0]) << 32) | out[1];
    buf_[1] = (static_cast<uint64_t>(out[2]) << 32) | out[3];
    pos_ = 0;
}

double Rng::uniform() {
    // 53 random bits, shifted by half an ulp so 0 is never returned
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::gamma(double shape, double scale) {
    std::gamma_distribution<double> g(shape, scale);
    return g(*this);
}

uint64_t Rng::poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<uint64_t> p(mean);
    return p(*this);
}

uint64_t Rng::below(uint64_t n) {
    std::uniform_int_distribution<uint64_t> d(0, n - 1);
    return d(*this);
}

}  // namespace wb
