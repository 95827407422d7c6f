#pragma once

#include <cstdint>
#include <vector>

#include "rscdma/hermlin.hpp"

namespace rscdma
{

/// Gaussian inputs, Gaussian postulated prior with the true noise level
/// (linear MMSE front end), i.i.d. users with M antennas each.
struct GaussianScenario
{
    enum class GainLaw
    {
        IidGaussian,      // entries CN(0, 1/N)
        FixedRealizations // exact average over `realizations` (N x M each)
    };

    double beta = 1.0;
    int M = 1;
    int N = 1;
    double P = 1.0;
    double n0 = 1.0;
    GainLaw gain_law = GainLaw::IidGaussian;
    std::vector<CMat> realizations;
    std::size_t eig_samples = 100000;
    std::uint64_t seed = 1;
    int quad_order = 64;           // Gauss-Laguerre nodes for the ||h||^2 law
    double target_rel_se = 5e-3;   // eigenvalue-pool Monte Carlo budget

    void validate() const;
};

/// Nonzero eigenvalues of H^H H, one list per channel draw.
struct EigPool
{
    std::vector<std::vector<double>> eigs;

    static EigPool build(const GaussianScenario &gs);
};

/// N_R = N0 + (beta M / N) E[P g / (1 + P g / N_R)], g = ||h||^2.
double nr_fixed_point(const GaussianScenario &gs);

/// beta M E[log2(1 + P g / N_R)]
double c_lmmse_sts(const GaussianScenario &gs);

/// N_W = N0 + (beta / N) E[sum_i P l_i / (1 + P l_i / N_W)] over the nonzero
/// eigenvalues l_i of H^H H.
double nw_fixed_point(const GaussianScenario &gs, const EigPool &pool);
double nw_fixed_point(const GaussianScenario &gs);

/// beta E[sum_i log2(1 + P l_i / N_W)]; throws EigPoolTooSmall when the
/// pool's relative standard error exceeds gs.target_rel_se.
double c_lmmse_ts(const GaussianScenario &gs, const EigPool &pool);
double c_lmmse_ts(const GaussianScenario &gs);

} // namespace rscdma
