#include <iostream>
#include <string>
#include <vector>

#include "coopstyle/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return coopstyle::cli::run_cli(args, std::cout, std::cerr);
}
