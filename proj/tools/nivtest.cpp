#include <iostream>
#include <string>
#include <vector>

#include "nivtest/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return nivtest::cli::run_cli(args, std::cout, std::cerr);
}
