#include <iostream>

#include "rnnbench/cli.hpp"

int main(int argc, char** argv) {
  return rnnbench::cli::parse_and_dispatch(argc, argv, std::cout, std::cerr);
}
