#include <iostream>
#include <vector>

#include "ulamkit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ulamkit::cli::command_dispatch(args, std::cout, std::cerr);
}
