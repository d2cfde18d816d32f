#include <vector>

#include "ndps/cli_io.hpp"

int main(int argc, char** argv) {
  return ndps::run_cli(std::vector<std::string>(argv, argv + argc));
}
