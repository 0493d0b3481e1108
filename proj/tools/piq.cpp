#include <iostream>

#include "piq/cli.hpp"

int main(int argc, char** argv) {
  return piq::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
