#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "blockmfg/cli_parse.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    blockmfg::ExperimentConfig cfg = blockmfg::parse_cli(args);
    if (cfg.command.empty()) {
      std::cerr << "usage: blockmfg <enumerate|solve|sweep|exhaustive|simulate> [options]\n"
                << "       blockmfg --help\n";
      return 2;
    }
    return blockmfg::run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
