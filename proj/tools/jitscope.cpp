#include <iostream>
#include <string>
#include <vector>

#include "jitscope/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return jitscope::cli::run(args, std::cout, std::cerr);
}
