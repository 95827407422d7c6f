#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rscdma/mc_sim.hpp"
#include "rscdma/state_evolution.hpp"

namespace rscdma
{

inline constexpr int kConfigVersion = 1;

enum class InitPolicy
{
    Both, // NoiseOnly and FullInterference, minimum free energy selected
    NoiseOnly,
    FullInterference
};

struct SweepBlock
{
    std::vector<double> betas;
    int refine_levels = 0;
    int refine_points = 9;
};

struct SimulationBlock
{
    int K = 1;
    int L = 1;
    std::size_t trials = 1000;
    Detector detector = Detector::LMMSE;
    ChipLaw chips = ChipLaw::Qpsk;
    bool fresh_ensemble = true;
    bool pool_users = false;
    bool write_trials = false;
};

struct ValidationBlock
{
    double z_threshold = 3.0;
    double rel_tol = 1e-2;
    bool corollary = true;
    std::size_t eig_samples = 100000;
    /// Overrides applied to the scenario used for predictions only.
    std::optional<double> prediction_n0;
    std::optional<double> prediction_nt0;
};

struct OutputBlock
{
    std::string directory = ".";
    std::string format = "csv"; // csv | json
};

/// Parsed, validated run configuration. Powers are linear; SNRs given in dB
/// are converted once here (N0 = P / 10^(snr/10)).
struct RunConfig
{
    int version = kConfigVersion;
    std::uint64_t seed = 1;
    Scenario scenario;
    SolverConfig solver;
    InitPolicy init = InitPolicy::Both;
    MiEstimator mi;
    std::optional<SweepBlock> sweep;
    std::optional<SimulationBlock> simulation;
    std::optional<ValidationBlock> validation;
    OutputBlock output;
    /// FNV-1a over the canonical JSON text and the effective seed.
    std::uint64_t hash = 0;

    SimParams sim_params() const;
};

/// Throws ConfigError naming the key path (and line when known).
RunConfig parse_config(const std::string &text, std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig load_config(const std::string &path, std::optional<std::uint64_t> seed_override = std::nullopt);

std::uint64_t fnv1a(const std::string &s);
std::string hex64(std::uint64_t v);

} // namespace rscdma
