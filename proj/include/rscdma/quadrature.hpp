#pragma once

#include <cstdint>
#include <vector>

namespace rscdma::quad
{

struct Rule
{
    std::vector<double> nodes;
    std::vector<double> weights; // normalized: sum == 1
};

/// Gauss-Hermite rule for expectations over N(0,1) (probabilists' weight).
/// Cached per order; safe to call concurrently.
const Rule &gauss_hermite(int order);

/// Generalized Gauss-Laguerre rule for expectations over Gamma(alpha+1, 1).
const Rule &gauss_laguerre(int order, double alpha);

/// Point `index` of the Halton sequence in `dim` dimensions, with a
/// Cranley-Patterson shift derived from `seed` (seed 0 means no shift).
std::vector<double> halton_point(std::uint64_t index, int dim, std::uint64_t seed);

/// Standard normal quantile.
double normal_quantile(double u);

} // namespace rscdma::quad
