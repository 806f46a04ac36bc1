#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gxpo/grpo_toy.hpp"

namespace gxpo {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One training/sweep run, parseable from a plain-text key=value file.
// Unknown keys are rejected with the offending line number.
struct RunConfig {
  Method method = Method::Gxpo;
  std::string task = "toy";  // toy | quadratic
  long steps = 80;
  std::vector<std::uint64_t> seeds = {1};
  std::string out_dir = "runs";

  OptimizerConfig optimizer;
  GxpoConfig gxpo;
  SfpoConfig sfpo;

  // toy task
  std::size_t questions = 8;
  std::size_t answers = 4;
  std::size_t group_size = 8;
  std::uint64_t task_seed = 7;
  double clip_eps = 0.2;
  double kl_beta = 0.001;
  double eps_a = 1e-8;

  // quadratic task
  std::string objective_spec = "quadratic d=16 lo=0.1 hi=1 diagonal=0 seed=3";
  double theta0_scale = 1.0;
  std::uint64_t theta0_seed = 11;

  // sweep grids (sweep command only)
  std::vector<double> sweep_alpha;
  std::vector<int> sweep_k;

  ToyTrainConfig toy_train_config() const;
  void validate() const;
};

RunConfig parse_run_config_text(const std::string& text, const std::string& origin);
RunConfig parse_run_config_file(const std::string& path);

}  // namespace gxpo
