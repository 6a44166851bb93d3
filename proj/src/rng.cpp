#include "cbipc/rng.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace cbipc {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
}

Stream::Stream(std::uint64_t seed, std::uint64_t path_id, Channel channel)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      ctr_{static_cast<std::uint32_t>(path_id), static_cast<std::uint32_t>(path_id >> 32),
           static_cast<std::uint32_t>(channel), 0u} {}

void Stream::refill() {
    buf_ = philox4x32(ctr_, key_);
    ++ctr_[3];
    pos_ = 0;
}

std::uint32_t Stream::next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
}

Stream::result_type Stream::operator()() {
    const std::uint64_t hi = next_u32();
    const std::uint64_t lo = next_u32();
    return (hi << 32) | lo;
}

double Stream::uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double a = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

std::uint64_t Stream::poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    if (mean < 30.0) {
        // inversion by sequential search; one uniform per draw
        const double u = uniform();
        double p = std::exp(-mean);
        double cdf = p;
        std::uint64_t n = 0;
        while (u > cdf && n < 1000) {
            ++n;
            p *= mean / static_cast<double>(n);
            cdf += p;
        }
        return n;
    }
    std::poisson_distribution<std::uint64_t> dist(mean);
    return dist(*this);
}

}  // namespace cbipc
