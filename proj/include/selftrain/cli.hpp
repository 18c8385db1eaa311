#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace selftrain::cli {

/// Runs one subcommand of {track, pseudolabel, remap, auto-threshold, eval,
/// sim}. `args` excludes the program name. A machine-readable JSON summary
/// goes to `out`; diagnostics go to `err` (verbosity via SELFTRAIN_LOG:
/// quiet|warn|info). Returns 0 on success, 1 on validation or runtime
/// failures, 2 on usage errors.
int run(std::vector<std::string> args, std::ostream& out = std::cout,
        std::ostream& err = std::cerr);

}  // namespace selftrain::cli
