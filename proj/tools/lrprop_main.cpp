#include "lrprop/commands.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return lrprop::commands::run_cli(argc, argv, std::cout, std::cerr);
}
