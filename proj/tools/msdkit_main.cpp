#include <vector>

#include "msd/cli.hpp"

int main(int argc, char** argv) {
  return msd::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
