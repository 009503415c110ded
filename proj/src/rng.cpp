#include "acvae/rng.hpp"

#include <cmath>

#include "acvae/errors.hpp"

namespace acvae {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : state_(mix64(seed + kGolden) ^ mix64(stream * kGolden + 1)) {}

std::uint64_t Rng::next_u64() {
    state_ += kGolden;
    return mix64(state_);
}

double Rng::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::next_below(std::uint64_t n) {
    if (n == 0) throw ConfigError("Rng::next_below: n must be positive");
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

double Rng::next_normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * next_uniform() - 1.0;
        v = 2.0 * next_uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
}

Matrix Rng::normal_matrix(std::size_t rows, std::size_t cols) {
    Matrix out(rows, cols);
    for (double& x : out.data) x = next_normal();
    return out;
}

Matrix Rng::uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi) {
    Matrix out(rows, cols);
    for (double& x : out.data) x = lo + (hi - lo) * next_uniform();
    return out;
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(next_below(i));
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag_a, std::uint64_t tag_b) {
    return mix64(mix64(seed + kGolden) ^ mix64(tag_a * kGolden + 0x632BE59BD9B4E019ull) ^
                 (tag_b * kGolden + 1));
}

}  // namespace acvae
