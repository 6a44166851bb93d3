#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace cbipc {

// Philox4x32-10 block function (Salmon et al., counter-based).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

// Noise channels. Each role owns its own counter lane so that an engine which
// skips a role does not shift the draws of the others.
enum class Channel : std::uint32_t {
    X = 1,
    Y = 2,
    Cir = 3,
    Aux = 4,
};

// One independent random stream per (master seed, path id, channel).
// Satisfies UniformRandomBitGenerator with 64-bit output.
class Stream {
public:
    using result_type = std::uint64_t;

    Stream(std::uint64_t seed, std::uint64_t path_id, Channel channel);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    std::uint32_t next_u32();
    result_type operator()();

    // Uniform on the open interval (0,1), 53-bit resolution.
    double uniform();
    double normal();
    std::uint64_t poisson(double mean);

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Path ids used by Monte Carlo drivers: init index in the high word, path index in the low word.
inline std::uint64_t path_id(std::uint64_t init_index, std::uint64_t path_index) {
    return (init_index << 32) | (path_index & 0xffffffffULL);
}

}  // namespace cbipc
