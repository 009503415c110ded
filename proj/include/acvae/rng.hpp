#pragma once

#include <cstdint>

#include "acvae/matrix.hpp"

namespace acvae {

// Deterministic counter-based generator (splitmix64). The same seed yields
// the same stream on every platform, which the split/train/bootstrap
// reproducibility contracts depend on; the standard <random> distributions
// are not portable across library implementations, so we do not use them.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();

    // Uniform in [0, 1).
    double next_uniform();

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n);

    // Standard normal via the Marsaglia polar transform.
    double next_normal();

    Matrix normal_matrix(std::size_t rows, std::size_t cols);
    Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi);

    // Deterministic Fisher-Yates permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Mixes a seed with tags to derive independent sub-stream seeds
// (per bootstrap repeat, per method, per epoch shuffle, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag_a, std::uint64_t tag_b = 0);

}  // namespace acvae
