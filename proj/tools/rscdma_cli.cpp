// rscdma: solve | sweep | simulate | validate on a JSON run configuration.
#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "rscdma/commands.hpp"
#include "rscdma/errors.hpp"
#include "rscdma/kernels.hpp"

int main(int argc, char **argv)
{
    CLI::App app{"Replica-symmetric analysis and simulation of multi-antenna CDMA"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    rscdma::OutputTarget out;
    int threads = 0;

    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--config", config_path, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--out", out.directory, "output directory");
        sub->add_option("--threads", threads, "worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
        sub->add_option("--format", out.format, "table format")->check(CLI::IsMember({"csv", "json"}));
    };
    auto *solve = app.add_subcommand("solve", "solve the fixed point from both initializations");
    auto *sweep = app.add_subcommand("sweep", "continuation sweep over the load grid");
    auto *simulate = app.add_subcommand("simulate", "Monte Carlo link simulation");
    auto *validate = app.add_subcommand("validate", "simulation versus single-user predictions");
    for (auto *s : {solve, sweep, simulate, validate})
        add_common(s);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? rscdma::kExitOk : rscdma::kExitConfig;
    }

    if (threads > 0)
        rscdma::kernels::set_threads(threads);

    try
    {
        const rscdma::RunConfig cfg = rscdma::load_config(config_path, seed);
        if (solve->parsed())
            return rscdma::cmd_solve(cfg, out, std::cout);
        if (sweep->parsed())
            return rscdma::cmd_sweep(cfg, out, std::cout);
        if (simulate->parsed())
            return rscdma::cmd_simulate(cfg, out, std::cout);
        return rscdma::cmd_validate(cfg, out, std::cout);
    }
    catch (const rscdma::ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return rscdma::kExitConfig;
    }
    catch (const rscdma::InvalidPower &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return rscdma::kExitConfig;
    }
    catch (const rscdma::InvalidPrior &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return rscdma::kExitConfig;
    }
    catch (const rscdma::DimMismatch &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return rscdma::kExitConfig;
    }
    catch (const std::invalid_argument &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return rscdma::kExitConfig;
    }
    catch (const rscdma::Error &e)
    {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return rscdma::kExitConvergence;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return rscdma::kExitConvergence;
    }
}
