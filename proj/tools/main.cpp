#include <iostream>
#include <string>
#include <vector>

#include "sparsebm/cli.hpp"

int main(int argc, char** argv) {
  return sparsebm::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
