#include <iostream>
#include <string>
#include <vector>

#include "xg/study.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return xg::run_cli(args, std::cout, std::cerr);
}
