#include <vector>

#include "otlab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return otlab::run_cli(args);
}
