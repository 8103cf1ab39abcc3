#include <iostream>
#include <string>
#include <vector>

#include "alr/cli.hpp"

int main(int argc, char** argv) {
  return alr::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
