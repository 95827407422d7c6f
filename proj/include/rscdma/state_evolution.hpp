#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rscdma/hermlin.hpp"
#include "rscdma/priors.hpp"
#include "rscdma/single_user.hpp"

namespace rscdma
{

enum class Scheme
{
    STS, // independent spreading per transmit antenna
    TS   // one spreading sequence shared by a user's antennas
};

const char *to_string(Scheme s);

/// Users sharing antenna count and priors; `frac` is the group's share of
/// the load (fracs sum to the scenario beta).
struct Group
{
    double frac = 0.0;
    int antennas = 1;
    VectorPrior true_prior;
    VectorPrior post_prior;
};

struct ChannelLaw
{
    enum class Kind
    {
        IidGaussian,      // entries i.i.d. CN(0, 1/N)
        FixedRealizations // exact average over `realizations`
    };
    enum class Sampler
    {
        MonteCarlo,
        QuasiMonteCarlo
    };

    Kind kind = Kind::IidGaussian;
    Sampler sampler = Sampler::MonteCarlo;
    /// N x M_p each (the first M_p columns are used for group p).
    std::vector<CMat> realizations;
};

struct Scenario
{
    Scheme scheme = Scheme::STS;
    double beta = 1.0;
    int n_rx = 1;
    double n0 = 1.0;
    double nt0 = 1.0;
    std::vector<Group> groups;
    ChannelLaw channel_law;
    std::size_t channel_samples = 1000;
    std::uint64_t channel_seed = 1;

    /// One group carrying the whole load, same prior on every antenna.
    static Scenario single_group(Scheme scheme, double beta, int n_rx, int antennas, const Prior &true_prior,
                                 const Prior &post_prior, double n0, double nt0);

    void validate() const;
    /// Priors equal and n0 == nt0.
    bool matched() const;
    /// Same scenario with the load rescaled (group fracs scaled along).
    Scenario with_beta(double beta) const;
};

/// Channel draws shared across all solver iterations (common random numbers).
struct ChannelPool
{
    std::vector<std::vector<CMat>> per_group; // [group][draw], N x M_p

    static ChannelPool draw(const Scenario &scn);
    std::size_t draws(std::size_t group) const { return per_group[group].size(); }
};

struct SolverConfig
{
    enum class Init
    {
        NoiseOnly,        // A = N0 I, At = Nt0 I
        FullInterference, // every interferer at full power, undetected
        Explicit
    };

    double damping = 0.5;   // gamma in (0, 1]
    double tol = 1e-8;      // relative spectral-norm residual
    std::size_t max_iter = 2000;
    Integrator integrator = Integrator::gauss_hermite(40);
    Init init = Init::NoiseOnly;
    std::optional<HermMat> init_A;
    std::optional<HermMat> init_At;
    bool adaptive = true;        // halve the damping when the residual grows and the step reverses
    double min_damping = 1.0 / 1024;
    int anderson_depth = 0;      // 0: plain damped iteration; >0: Anderson mixing over that many past steps
    bool parallel = true;        // chunked OpenMP reduction vs serial reference
    bool compute_free_energy = true;
    double consistency_tol = 0.0; // matched ||A - At||_F / ||A||_F bound; 0 means 10 * tol

    void validate() const;
};

enum class Branch
{
    FromLowNoise,  // started at NoiseOnly
    FromHighNoise, // started at FullInterference
    UserInit
};

const char *to_string(Branch b);

struct FixedPoint
{
    HermMat A;  // R (STS) or W (TS)
    HermMat At; // R~ or W~
    double residual = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    double free_energy = 0.0; // bits; NaN when not computed
    Branch branch = Branch::UserInit;
    /// ||A - At||_F / ||A||_F for matched scenarios, 0 otherwise.
    double matched_gap = 0.0;
    bool consistent = true;
};

struct RhsPair
{
    HermMat A;
    HermMat At;
};

RhsPair rhs_sts(const Scenario &scn, const HermMat &A, const HermMat &At, const Integrator &integ,
                const ChannelPool &pool, bool parallel = true);
RhsPair rhs_ts(const Scenario &scn, const HermMat &A, const HermMat &At, const Integrator &integ,
               const ChannelPool &pool, bool parallel = true);
RhsPair rhs(const Scenario &scn, const HermMat &A, const HermMat &At, const Integrator &integ,
            const ChannelPool &pool, bool parallel = true);

/// Starting pair for an initialization policy.
RhsPair initial_pair(const Scenario &scn, const SolverConfig &cfg, const ChannelPool &pool);

FixedPoint solve(const Scenario &scn, const SolverConfig &cfg);
FixedPoint solve(const Scenario &scn, const SolverConfig &cfg, const ChannelPool &pool);

/// beta * avg cross-information + N log2(pi e N0) + F(A, At), in bits.
double free_energy(const Scenario &scn, const FixedPoint &fp, const Integrator &integ, const ChannelPool &pool);

/// Throws MismatchedScenario unless scn.matched().
double c_joint(const Scenario &scn, const FixedPoint &fp, const Integrator &integ, const ChannelPool &pool);

double c_sep(const Scenario &scn, const FixedPoint &fp, const Integrator &integ, const ChannelPool &pool,
             const MiEstimator &est = {});

/// Total transmit antennas per unit load: sum_p frac_p M_p / beta.
double mean_antennas(const Scenario &scn);

// --- branch sweep -------------------------------------------------------------

struct SweepOptions
{
    double dedup_tol = 1e-4;   // relative Frobenius distance separating branches
    double tie_tol = 1e-9;     // free energies closer than this are a tie
    int refine_levels = 0;     // grid refinements around the largest jump
    int refine_points = 9;     // points inserted per refinement
    bool concurrent_directions = true;
};

struct SweepPoint
{
    double beta = 0.0;
    std::vector<FixedPoint> solutions; // deduplicated
    std::size_t selected = 0;
    bool tie = false;
    std::vector<std::string> warnings;
    std::optional<FixedPoint> upward;   // continuation from the low-noise side
    std::optional<FixedPoint> downward; // continuation from the high-noise side
};

/// Index of the minimum-free-energy solution; ties go to the larger ||A||_F.
std::size_t select_branch(const std::vector<FixedPoint> &sols, double tie_tol, bool *tie = nullptr);

/// Two-direction continuation over an increasing beta grid.
std::vector<SweepPoint> branch_sweep(const Scenario &scn_template, const std::vector<double> &beta_grid,
                                     const SolverConfig &cfg, const SweepOptions &opt = {});

} // namespace rscdma
