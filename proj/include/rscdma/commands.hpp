#pragma once

#include <ostream>
#include <string>

#include "rscdma/config.hpp"

namespace rscdma
{

enum ExitCode : int
{
    kExitOk = 0,
    kExitConfig = 1,
    kExitConvergence = 2,
    kExitValidation = 3
};

/// Where outputs go; `directory` and `format` override the config's output block when nonempty.
struct OutputTarget
{
    std::string directory;
    std::string format;
};

/// Each command writes its table(s) under the output directory, prints a
/// short summary to `log`, and returns an ExitCode.
int cmd_solve(const RunConfig &cfg, const OutputTarget &out, std::ostream &log);
int cmd_sweep(const RunConfig &cfg, const OutputTarget &out, std::ostream &log);
int cmd_simulate(const RunConfig &cfg, const OutputTarget &out, std::ostream &log);
int cmd_validate(const RunConfig &cfg, const OutputTarget &out, std::ostream &log);

} // namespace rscdma
