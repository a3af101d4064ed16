#include <string>
#include <vector>

#include "esparse/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return esparse::run_cli(args);
}
