#include <vector>

#include "selftrain/cli.hpp"

int main(int argc, char** argv) {
  return selftrain::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
