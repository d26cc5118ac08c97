#include <iostream>

#include "gaitnet/cli.hpp"

int main(int argc, char** argv) {
  return gaitnet::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
