#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gxpo/commands.hpp"
#include "gxpo/run_config.hpp"
#include "gxpo/suites.hpp"

using namespace gxpo;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gxpo_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config parsing covers every key and rejects unknowns by line") {
  const std::string text =
      "# toy run\n"
      "method = gxpo\n"
      "task = toy\n"
      "steps = 12\n"
      "seeds = 1, 2, 3\n"
      "out = somewhere\n"
      "optimizer = adaptive-moment\n"
      "learning_rate = 0.25\n"
      "k = 7\n"
      "alpha = 0.4\n"
      "delta = 1e-9\n"
      "tau = 1.5\n"
      "window = 16\n"
      "questions = 6\n"
      "answers = 5\n"
      "group_size = 4\n"
      "clip_eps = 0.3\n"
      "kl_beta = 0.002\n";
  const RunConfig cfg = parse_run_config_text(text, "test");
  CHECK(cfg.method == Method::Gxpo);
  CHECK(cfg.steps == 12);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(cfg.out_dir == "somewhere");
  CHECK(cfg.optimizer.kind == OptimizerKind::AdaptiveMoment);
  CHECK(cfg.optimizer.learning_rate == 0.25);
  CHECK(cfg.gxpo.virtual_depth == 7);
  CHECK(cfg.sfpo.fast_steps == 7);
  CHECK(cfg.gxpo.alpha == 0.4);
  CHECK(cfg.gxpo.tau == 1.5);
  CHECK(cfg.gxpo.window == 16);
  CHECK(cfg.questions == 6);
  CHECK(cfg.answers == 5);
  CHECK(cfg.group_size == 4);
  CHECK(cfg.clip_eps == 0.3);

  try {
    parse_run_config_text("method = gxpo\nnope = 1\n", "bad");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bad:2") != std::string::npos);
    CHECK(std::string(e.what()).find("nope") != std::string::npos);
  }

  CHECK_THROWS_AS(parse_run_config_text("method gxpo\n", "x"), ConfigError);
  CHECK_THROWS_AS(parse_run_config_text("task = tennis\n", "x"), ConfigError);
  CHECK_THROWS_AS(parse_run_config_text("steps = many\n", "x"), ConfigError);
}

TEST_CASE("tau accepts inf to disable the gate") {
  const RunConfig cfg = parse_run_config_text("tau = inf\n", "t");
  CHECK(std::isinf(cfg.gxpo.tau));
}

TEST_CASE("cmd_train writes one curve per seed plus an aggregate, byte-stable") {
  RunConfig cfg;
  cfg.method = Method::Grpo;
  cfg.steps = 10;
  cfg.seeds = {1, 2};
  const fs::path dir = fresh_dir("train_a");
  cfg.out_dir = dir.string();
  REQUIRE(cmd_train(cfg) == 0);

  CHECK(fs::exists(dir / "curve_seed1.csv"));
  CHECK(fs::exists(dir / "curve_seed2.csv"));
  CHECK(fs::exists(dir / "aggregate.csv"));
  CHECK(fs::exists(dir / "diagnostics_seed1.csv"));

  const std::string first = slurp(dir / "curve_seed1.csv");
  {
    std::istringstream is(first);
    std::string header;
    std::getline(is, header);
    CHECK(header ==
          "step,mean_reward,passes_cumulative,phase,clip_fraction,kl_penalty,z_score");
    // 10 steps of single-pass grpo
    int rows = 0;
    std::string line;
    std::string last;
    while (std::getline(is, line)) {
      if (!line.empty()) { ++rows; last = line; }
    }
    CHECK(rows == 10);
    CHECK(last.find(",10,") != std::string::npos);  // passes_cumulative == steps
  }

  const fs::path dir2 = fresh_dir("train_b");
  cfg.out_dir = dir2.string();
  REQUIRE(cmd_train(cfg) == 0);
  CHECK(slurp(dir2 / "curve_seed1.csv") == first);
  CHECK(slurp(dir2 / "aggregate.csv") == slurp(dir / "aggregate.csv"));
}

TEST_CASE("gxpo train with the gate off accumulates three passes per step") {
  RunConfig cfg;
  cfg.method = Method::Gxpo;
  cfg.steps = 10;
  cfg.seeds = {4};
  cfg.gxpo.tau = std::numeric_limits<double>::infinity();
  const fs::path dir = fresh_dir("train_gxpo");
  cfg.out_dir = dir.string();
  REQUIRE(cmd_train(cfg) == 0);
  const std::string curve = slurp(dir / "curve_seed4.csv");
  std::istringstream is(curve);
  std::string line, last;
  while (std::getline(is, line)) {
    if (!line.empty()) last = line;
  }
  CHECK(last.find(",30,") != std::string::npos);  // 3 passes x 10 steps
}

TEST_CASE("cmd_train on a quadratic task emits the loss-curve schema") {
  RunConfig cfg;
  cfg.method = Method::Gxpo;
  cfg.task = "quadratic";
  cfg.steps = 8;
  cfg.seeds = {1};
  cfg.optimizer.kind = OptimizerKind::PlainGd;
  cfg.optimizer.learning_rate = 0.1;
  cfg.objective_spec = "quadratic d=6 lo=0.1 hi=1 diagonal=0 seed=5";
  const fs::path dir = fresh_dir("train_quad");
  cfg.out_dir = dir.string();
  REQUIRE(cmd_train(cfg) == 0);
  const std::string curve = slurp(dir / "curve_seed1.csv");
  CHECK(curve.substr(0, curve.find('\n')) ==
        "step,loss,passes_cumulative,phase,z_score");
}

TEST_CASE("cmd_sweep lays out the alpha x K grid") {
  RunConfig cfg;
  cfg.method = Method::Gxpo;
  cfg.steps = 3;
  cfg.seeds = {1};
  cfg.sweep_alpha = {0.1, 0.5, 1.0};
  cfg.sweep_k = {3, 5, 10};
  const fs::path dir = fresh_dir("sweep");
  cfg.out_dir = dir.string();
  REQUIRE(cmd_sweep(cfg) == 0);

  int curve_files = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() &&
        entry.path().filename().string().rfind("curve_alpha", 0) == 0) {
      ++curve_files;
    }
  }
  CHECK(curve_files == 9);
  CHECK(fs::exists(dir / "alpha0.5_k3" / "curve_seed1.csv"));

  RunConfig no_grid = cfg;
  no_grid.sweep_alpha.clear();
  CHECK(cmd_sweep(no_grid) == 2);
}

TEST_CASE("cmd_verify rejects unknown suites with a usage error") {
  const fs::path dir = fresh_dir("verify_bad");
  CHECK(cmd_verify("not-a-suite", dir.string()) == 2);
}

TEST_CASE("cmd_verify exactness exits 0 with one row per instance") {
  const fs::path dir = fresh_dir("verify_exact");
  REQUIRE(cmd_verify("exactness", dir.string()) == 0);
  std::istringstream is(slurp(dir / "exactness.csv"));
  std::string line;
  std::getline(is, line);  // header
  int rows = 0;
  while (std::getline(is, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 100);
}

TEST_CASE("a divergent quadratic run reports failure and keeps its partial curve") {
  RunConfig cfg;
  cfg.method = Method::Grpo;
  cfg.task = "quadratic";
  cfg.steps = 400;
  cfg.seeds = {1};
  cfg.optimizer.kind = OptimizerKind::PlainGd;
  cfg.optimizer.learning_rate = 1e5;  // expansive on any h in [0.1, 1]
  cfg.objective_spec = "quadratic d=4 lo=0.1 hi=1 diagonal=1 seed=2";
  const fs::path dir = fresh_dir("train_diverge");
  cfg.out_dir = dir.string();
  CHECK(cmd_train(cfg) == 1);
  const std::string curve = slurp(dir / "curve_seed1.csv");
  std::istringstream is(curve);
  std::string line;
  int rows = -1;  // header
  while (std::getline(is, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows > 0);
  CHECK(rows < 400);
}

TEST_CASE("suites registry matches the documented names") {
  CHECK(suite_names() == std::vector<std::string>{"exactness", "bounds", "bias",
                                                  "alignment", "budget", "gate",
                                                  "gradcheck"});
  for (const auto& name : suite_names()) CHECK(find_suite(name).has_value());
  CHECK(!find_suite("bogus").has_value());
}

TEST_CASE("cmd_verify gate run records the shutoff and the pass drop") {
  const fs::path dir = fresh_dir("verify_gate");
  REQUIRE(cmd_verify("gate", dir.string()) == 0);
  const std::string csv = slurp(dir / "gate.csv");
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);  // header
  int step = 0;
  int active_rows = 0, fallback_rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.find(",active,3,") != std::string::npos) {
      ++active_rows;
      CHECK(step <= 50);
    } else if (line.find(",fallback,1,") != std::string::npos) {
      ++fallback_rows;
      CHECK(step >= 51);
    }
    ++step;
  }
  CHECK(active_rows == 51);      // steps 0..50 extrapolate
  CHECK(fallback_rows == 1000);  // s* = 51 onward is single-pass
}

}  // TEST_SUITE
