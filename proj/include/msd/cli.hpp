#ifndef MSD_CLI_HPP
#define MSD_CLI_HPP

#include <string>
#include <vector>

namespace msd::cli {

/// Exit codes: 0 success, 2 usage error, 3 data error, 4 convergence
/// failure, 5 internal error.
int run_cli(const std::vector<std::string>& args);

}  // namespace msd::cli

#endif  // MSD_CLI_HPP
