#include <iostream>

#include "loopshape/cli.hpp"

int main(int argc, char** argv) {
  return loopshape::cli::run_cli(argc, argv, std::cout, std::cerr);
}
