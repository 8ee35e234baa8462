#include <iostream>
#include <string>
#include <vector>

#include "blepi/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return blepi::cli::run(args, std::cout, std::cerr);
}
