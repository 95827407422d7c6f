#pragma once

#include <cstdint>
#include <vector>

#include "rscdma/hermlin.hpp"
#include "rscdma/priors.hpp"
#include "rscdma/single_user.hpp"
#include "rscdma/state_evolution.hpp"

namespace rscdma
{

enum class ChipLaw
{
    Qpsk,    // (+-1 +- j) / sqrt(2L)
    Gaussian // CN(0, 1/L)
};

enum class Detector
{
    LMMSE,     // Gaussian postulated priors
    ExactGPME  // enumeration over the joint product constellation
};

struct SimParams
{
    int K = 1;
    int L = 1;
    int N = 1;
    int M = 1; // antennas per user
    Scheme scheme = Scheme::STS;
    VectorPrior true_prior;
    VectorPrior post_prior;
    double n0 = 1.0;
    double nt0 = 1.0;
    ChipLaw chips = ChipLaw::Qpsk;
    /// Fresh chips and channels every trial; false conditions on one ensemble.
    bool fresh_ensemble = true;
    std::uint64_t seed = 1;
    int enumeration_cap_bits = 20;

    void validate() const;
};

struct SimEnsemble
{
    SimParams params;
    /// chips[k] is L x M; under TS all columns of a user are equal.
    std::vector<CMat> chips;
    std::vector<CMat> channels; // N x M per user
    /// Stacked NL x KM matrix: row l*N + n, column k*M + m.
    CMat A;
};

SimEnsemble gen_ensemble(const SimParams &params, std::uint64_t seed);

/// Builds the stacked matrix from chips and channels.
CMat stack_matrix(const std::vector<CMat> &chips, const std::vector<CMat> &channels, int N);

struct DetectionRecord
{
    std::vector<CVec> x;    // per user, length M
    std::vector<CVec> xhat; // per user, length M
    std::uint64_t seed = 0;
};

/// One detection on a given ensemble and received vector.
CVec detect(const SimEnsemble &ens, const CVec &y, Detector det);

std::vector<DetectionRecord> run_trials(const SimParams &params, Detector det, std::size_t trials);

struct MomentEstimate
{
    double value = 0.0;
    double error = 0.0; // jackknife standard error
};

/// Sample moment prod_m Re(x_m)^ir Im(x_m)^ii Re(xh_m)^jr Im(xh_m)^ji for
/// user k. With pool_users, each trial contributes its average over users.
MomentEstimate empirical_moments(const std::vector<DetectionRecord> &records, int k,
                                 const std::vector<MomentExponents> &exps, bool pool_users = false);

/// Single-antenna moment of antenna `m` (exponents elsewhere zero).
MomentEstimate empirical_antenna_moment(const std::vector<DetectionRecord> &records, int k, int m,
                                        const MomentExponents &e, bool pool = false);

/// Every (ir, ii, jr, ji) with total order 1 or 2 (14 tuples).
std::vector<MomentExponents> low_order_moments();

struct MomentComparison
{
    MomentExponents exps;
    double estimate = 0.0;
    double error = 0.0;
    double prediction = 0.0;
    double z = 0.0;
};

struct DecouplingReport
{
    FixedPoint fixed_point;
    std::vector<MomentComparison> rows;
    double max_abs_z = 0.0;
    double median_abs_err = 0.0;
};

/// Single-antenna predictions for antenna m of the asymptotic scenario,
/// averaged over its channel pool at the fixed point.
double predicted_moment(const Scenario &scn, const FixedPoint &fp, const ChannelPool &pool, int m,
                        const MomentExponents &e, const Integrator &integ);

/// Compares finite-size moments of antenna 0 (user 0, or pooled over users
/// and antennas) with single-user predictions at the fixed point of `scn`.
DecouplingReport decoupling_report(const SimParams &params, const Scenario &scn,
                                   const std::vector<MomentExponents> &moments, std::size_t trials, Detector det,
                                   const SolverConfig &cfg, bool pool_users = false);

/// Compares pre-computed records (same contract as decoupling_report).
DecouplingReport compare_moments(const std::vector<DetectionRecord> &records, const Scenario &scn,
                                 const FixedPoint &fp, const ChannelPool &pool,
                                 const std::vector<MomentExponents> &moments, const Integrator &integ,
                                 bool pool_users);

} // namespace rscdma
