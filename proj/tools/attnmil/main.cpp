#include <iostream>

#include "attnmil/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return attnmil::cli::run(args, std::cout, std::cerr);
}
