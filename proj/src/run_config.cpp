#include "gxpo/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "gxpo/rng.hpp"

namespace gxpo {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& v, const std::string& where) {
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected a number, got '" + v + "'");
  }
}

long parse_long(const std::string& v, const std::string& where) {
  try {
    std::size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected an integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "0" || v == "false") return false;
  if (v == "1" || v == "true") return true;
  throw ConfigError(where + ": expected 0/1, got '" + v + "'");
}

std::vector<std::string> split_commas(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

ToyTrainConfig RunConfig::toy_train_config() const {
  ToyTrainConfig cfg;
  cfg.task = ToyTask{questions, answers, {}};
  cfg.task.correct.resize(questions);
  Rng rng(task_seed);
  for (auto& c : cfg.task.correct) {
    c = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(answers)));
  }
  cfg.group_size = group_size;
  cfg.clip_eps = clip_eps;
  cfg.kl_beta = kl_beta;
  cfg.eps_a = eps_a;
  cfg.steps = steps;
  cfg.optimizer = optimizer;
  cfg.gxpo = gxpo;
  cfg.sfpo = sfpo;
  return cfg;
}

void RunConfig::validate() const {
  if (task != "toy" && task != "quadratic") {
    throw ConfigError("task must be 'toy' or 'quadratic', got '" + task + "'");
  }
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (seeds.empty()) throw ConfigError("at least one seed required");
  optimizer.validate();
  gxpo.validate();
  sfpo.validate();
}

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) {
      throw ConfigError(where + ": empty key or value");
    }

    if (key == "method") {
      const auto m = parse_method(val);
      if (!m) throw ConfigError(where + ": unknown method '" + val + "'");
      cfg.method = *m;
    } else if (key == "task") {
      cfg.task = val;
    } else if (key == "steps") {
      cfg.steps = parse_long(val, where);
    } else if (key == "seeds") {
      cfg.seeds.clear();
      for (const auto& s : split_commas(val)) {
        cfg.seeds.push_back(static_cast<std::uint64_t>(parse_long(s, where)));
      }
      if (cfg.seeds.empty()) throw ConfigError(where + ": empty seed list");
    } else if (key == "out") {
      cfg.out_dir = val;
    } else if (key == "optimizer") {
      if (val == "plain-gd") cfg.optimizer.kind = OptimizerKind::PlainGd;
      else if (val == "adaptive-moment") cfg.optimizer.kind = OptimizerKind::AdaptiveMoment;
      else throw ConfigError(where + ": unknown optimizer '" + val + "'");
    } else if (key == "learning_rate") {
      cfg.optimizer.learning_rate = parse_double(val, where);
    } else if (key == "beta1") {
      cfg.optimizer.beta1 = parse_double(val, where);
    } else if (key == "beta2") {
      cfg.optimizer.beta2 = parse_double(val, where);
    } else if (key == "epsilon") {
      cfg.optimizer.epsilon = parse_double(val, where);
    } else if (key == "weight_decay") {
      cfg.optimizer.weight_decay = parse_double(val, where);
    } else if (key == "grad_clip") {
      cfg.optimizer.grad_clip_norm = parse_double(val, where);
    } else if (key == "k") {
      const long k = parse_long(val, where);
      cfg.gxpo.virtual_depth = static_cast<int>(k);
      cfg.sfpo.fast_steps = static_cast<int>(k);
    } else if (key == "alpha") {
      const double a = parse_double(val, where);
      cfg.gxpo.alpha = a;
      cfg.sfpo.alpha = a;
    } else if (key == "delta") {
      cfg.gxpo.delta = parse_double(val, where);
    } else if (key == "tau") {
      const double t = parse_double(val, where);
      cfg.gxpo.tau = t;
      cfg.sfpo.tau = t;
    } else if (key == "window") {
      cfg.gxpo.window = static_cast<std::size_t>(parse_long(val, where));
      cfg.sfpo.window = cfg.gxpo.window;
    } else if (key == "eps_z") {
      cfg.gxpo.eps_z = parse_double(val, where);
      cfg.sfpo.eps_z = cfg.gxpo.eps_z;
    } else if (key == "eps_r") {
      cfg.gxpo.eps_r = parse_double(val, where);
    } else if (key == "r_max") {
      cfg.gxpo.ratio_clamp = parse_double(val, where);
    } else if (key == "restore_moments") {
      cfg.gxpo.restore_moments_at_reposition = parse_bool(val, where);
    } else if (key == "questions") {
      cfg.questions = static_cast<std::size_t>(parse_long(val, where));
    } else if (key == "answers") {
      cfg.answers = static_cast<std::size_t>(parse_long(val, where));
    } else if (key == "group_size") {
      cfg.group_size = static_cast<std::size_t>(parse_long(val, where));
    } else if (key == "task_seed") {
      cfg.task_seed = static_cast<std::uint64_t>(parse_long(val, where));
    } else if (key == "clip_eps") {
      cfg.clip_eps = parse_double(val, where);
    } else if (key == "kl_beta") {
      cfg.kl_beta = parse_double(val, where);
    } else if (key == "eps_a") {
      cfg.eps_a = parse_double(val, where);
    } else if (key == "objective") {
      cfg.objective_spec = val;
    } else if (key == "theta0_scale") {
      cfg.theta0_scale = parse_double(val, where);
    } else if (key == "theta0_seed") {
      cfg.theta0_seed = static_cast<std::uint64_t>(parse_long(val, where));
    } else if (key == "sweep_alpha") {
      cfg.sweep_alpha.clear();
      for (const auto& s : split_commas(val)) {
        cfg.sweep_alpha.push_back(parse_double(s, where));
      }
    } else if (key == "sweep_k") {
      cfg.sweep_k.clear();
      for (const auto& s : split_commas(val)) {
        cfg.sweep_k.push_back(static_cast<int>(parse_long(s, where)));
      }
    } else {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_run_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config_text(buf.str(), path);
}

}  // namespace gxpo
