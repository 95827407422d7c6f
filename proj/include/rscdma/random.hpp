#pragma once

#include <cstdint>
#include <random>

#include "rscdma/hermlin.hpp"

namespace rscdma
{

/// splitmix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for task `index` of a stream rooted at `seed`.
constexpr std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t index)
{
    return mix_seed(mix_seed(seed) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

/// Explicitly seeded random stream. Never shared between workers; each task
/// builds its own from a sub-seed.
class Rng
{
public:
    explicit Rng(std::uint64_t seed) : eng_(mix_seed(seed)) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }

    /// CN(0, variance)
    cd complex_normal(double variance = 1.0)
    {
        const double s = std::sqrt(0.5 * variance);
        const double re = normal();
        const double im = normal();
        return {s * re, s * im};
    }

    std::uint64_t next_u64() { return eng_(); }
    std::mt19937_64 &engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

/// N x M matrix with i.i.d. CN(0, variance) entries.
CMat complex_gaussian_matrix(Rng &rng, Eigen::Index rows, Eigen::Index cols, double variance);

} // namespace rscdma
