#include <iostream>
#include <string>
#include <vector>

#include "nbp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return nbp::run(args, std::cout, std::cerr);
}
