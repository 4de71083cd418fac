#pragma once

#include <cstdint>
#include <random>

namespace sisyphus {

/// Per-trajectory random stream. The stream is a pure function of
/// (master_seed, trajectory index), so every trajectory is reproducible on its
/// own and independent of which worker runs it.
class RandomStream {
public:
    RandomStream(std::uint64_t master_seed, std::uint64_t stream_index) {
        std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                          static_cast<std::uint32_t>(master_seed >> 32),
                          static_cast<std::uint32_t>(stream_index),
                          static_cast<std::uint32_t>(stream_index >> 32),
                          0x5151f00du};
        engine_.seed(seq);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() { return normal_(engine_); }

    /// Integer uniform on [0, n).
    unsigned below(unsigned n) { return static_cast<unsigned>(uniform() * n); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace sisyphus
