#pragma once

#include <cstdint>
#include <random>

namespace esnctl {

/// Thin wrapper around mt19937_64 producing doubles with a fixed, portable
/// mapping (53-bit mantissa), so seeded draws are identical across standard
/// libraries. std::uniform_real_distribution is implementation-defined and
/// would break the bit-reproducibility guarantees.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform in [0, 1).
    double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform in [-1, 1).
    double symmetric() { return 2.0 * u01() - 1.0; }

    /// Uniform integer in [0, m). m must be positive and far below 2^53,
    /// which holds for every index range used here.
    std::uint64_t below(std::uint64_t m) {
        return static_cast<std::uint64_t>(u01() * static_cast<double>(m));
    }

    std::uint64_t raw() { return gen_(); }

  private:
    std::mt19937_64 gen_;
};

}  // namespace esnctl
