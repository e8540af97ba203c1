#include <iostream>

#include "mrk_cli/cli.hpp"

int main(int argc, char** argv) {
  return mrk::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
