#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "blockmfg/cli_parse.hpp"

using namespace blockmfg;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("blockmfg_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static inline int counter = 0;
};

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("defaults match the documented parameter table") {
  ExperimentConfig cfg = parse_cli({});
  CHECK(cfg.model.n_agents == 1000);
  CHECK(cfg.model.max_blocks == 5);
  CHECK(cfg.model.timing.alpha == 0.001);
  CHECK(cfg.model.timing.delta == 0.01);
  CHECK(cfg.model.gamma == 0.99);
  CHECK(cfg.model.epsilon == 0.01);
  CHECK(cfg.model.reward_per_block == 1.0);
  CHECK(cfg.initial_policy == "lcr");
  CHECK(cfg.rho_grid == std::vector<double>{0.5, 0.9, 0.99});
}

TEST_CASE("out-of-range values are rejected with the key named") {
  CHECK_THROWS_WITH_AS(parse_cli({"--epsilon", "0.6"}),
                       doctest::Contains("epsilon"), ConfigError);
  CHECK_THROWS_AS(parse_cli({"--alpha", "1.5"}), ConfigError);
  CHECK_THROWS_AS(parse_cli({"--max-blocks", "11"}), ConfigError);
  CHECK_THROWS_AS(parse_cli({"--mu-mode", "bogus"}), ConfigError);
  CHECK_THROWS_AS(parse_cli({"--rho", "1.0"}), ConfigError);
}

TEST_CASE("config files parse and flags override them") {
  TempDir tmp;
  auto file = tmp.path / "run.cfg";
  {
    std::ofstream f(file);
    f << "alpha=0.002\n";
    f << "delta=0.05\n";
    f << "max-blocks=4\n";
  }
  ExperimentConfig cfg = parse_cli({"--config", file.string()});
  CHECK(cfg.model.timing.alpha == 0.002);
  CHECK(cfg.model.timing.delta == 0.05);
  CHECK(cfg.model.max_blocks == 4);
  // explicit flag wins over the file value
  ExperimentConfig over = parse_cli({"--config", file.string(), "--delta", "0.09"});
  CHECK(over.model.timing.delta == 0.09);
  CHECK(over.model.timing.alpha == 0.002);
}

TEST_CASE("unknown config keys are rejected") {
  TempDir tmp;
  auto file = tmp.path / "bad.cfg";
  {
    std::ofstream f(file);
    f << "alfa=0.002\n";
  }
  CHECK_THROWS_AS(parse_cli({"--config", file.string()}), ConfigError);
}

TEST_CASE("subcommands are recognized") {
  CHECK(parse_cli({"enumerate"}).command == "enumerate");
  CHECK(parse_cli({"solve", "--max-blocks", "4"}).command == "solve");
  CHECK(parse_cli({"sweep"}).command == "sweep");
  CHECK(parse_cli({"exhaustive"}).command == "exhaustive");
  CHECK(parse_cli({"simulate", "--seed", "9"}).seed == 9);
  CHECK_THROWS_AS(parse_cli({"frobnicate"}), ConfigError);
}

TEST_CASE("enumerate writes the catalogue artifacts") {
  TempDir tmp;
  ExperimentConfig cfg = parse_cli({"enumerate", "--max-blocks", "4", "--out", tmp.path.string()});
  CHECK(run(cfg) == 0);
  CHECK(std::filesystem::exists(tmp.path / "classes.txt"));
  CHECK(std::filesystem::exists(tmp.path / "states.txt"));
  auto rows = parse_csv([&] {
    std::ifstream f(tmp.path / "graph_counts.csv");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }());
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"size", "classes", "labeled_graphs", "states"});
  CHECK(rows[4][1] == "4");       // four classes of size 4
  CHECK(rows[4][2] == "16");      // 4^2 labeled trees with a pinned root
}

TEST_CASE("simulate emits a parseable, deterministic csv") {
  TempDir tmp;
  auto args = std::vector<std::string>{"simulate",       "--max-blocks", "3",
                                       "--block-steps",  "2000",         "--seed",
                                       "21",             "--out",        tmp.path.string()};
  ExperimentConfig cfg = parse_cli(args);
  CHECK(run(cfg) == 0);
  auto read = [&] {
    std::ifstream f(tmp.path / "oracle.csv");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  std::string first = read();
  auto rows = parse_csv(first);
  REQUIRE(rows.size() >= 4);
  CHECK(rows[0] == std::vector<std::string>{"metric", "estimate", "std_error"});
  CHECK(rows[1][0] == "efficiency");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 3);
    CHECK_NOTHROW(std::stod(rows[i][1]));
    CHECK_NOTHROW(std::stod(rows[i][2]));
  }
  CHECK(run(cfg) == 0);
  CHECK(read() == first);  // byte-identical rerun
}

TEST_SUITE_END();
