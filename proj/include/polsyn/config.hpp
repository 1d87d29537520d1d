#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "polsyn/basis.hpp"
#include "polsyn/car.hpp"
#include "polsyn/cegis.hpp"
#include "polsyn/ducted_fan.hpp"

namespace polsyn {

/// Configuration error carrying the offending field path.
struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string f, const std::string& msg)
      : std::runtime_error("config field '" + f + "': " + msg), field(std::move(f)) {}
};

/// Fully validated run configuration: plant, basis, MPC, falsifier, learner
/// and seed, loaded from one JSON file.
struct RunConfig {
  PlantModel model;
  BasisSet basis;
  MpcConfig mpc;
  CegisConfig cegis;
  int baseline_traces = 100;
  int baseline_max_steps = 300;
  std::string name;  // preset name, used for run-directory labeling
  nlohmann::json raw;  // snapshot of the parsed file
};

namespace detail {

template <typename T>
T require(const nlohmann::json& j, const std::string& path, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(path + key, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + key, e.what());
  }
}

template <typename T>
T optional(const nlohmann::json& j, const std::string& path, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + key, e.what());
  }
}

inline Vec require_vec(const nlohmann::json& j, const std::string& path, const std::string& key,
                       int expected) {
  auto v = require<std::vector<double>>(j, path, key);
  if (static_cast<int>(v.size()) != expected)
    throw ConfigError(path + key, "expected " + std::to_string(expected) + " entries, got " +
                                      std::to_string(v.size()));
  return Eigen::Map<const Vec>(v.data(), v.size());
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j, const std::string& config_dir = ".") {
  RunConfig rc;
  rc.raw = j;
  rc.name = detail::optional<std::string>(j, "", "name", "run");

  // plant
  if (!j.contains("plant")) throw ConfigError("plant", "missing");
  const auto& jp = j.at("plant");
  std::string type = detail::require<std::string>(jp, "plant.", "type");
  if (type == "car") {
    CarParams cp;
    cp.num_cars = detail::optional<int>(jp, "plant.", "num_cars", 1);
    if (cp.num_cars < 1) throw ConfigError("plant.num_cars", "must be >= 1");
    rc.model = make_car_model(cp);
  } else if (type == "ductedfan") {
    DuctedFanParams dp;
    if (jp.contains("params_file")) {
      std::string pf = jp.at("params_file").get<std::string>();
      if (!pf.empty() && pf[0] != '/') pf = config_dir + "/" + pf;
      dp = DuctedFanParams::load(pf);
    }
    rc.model = make_ducted_fan_model(dp);
  } else {
    throw ConfigError("plant.type", "unknown plant '" + type + "'");
  }

  // basis
  if (!j.contains("basis")) throw ConfigError("basis", "missing");
  const auto& jb = j.at("basis");
  std::vector<BasisTerm> terms;
  if (jb.contains("terms")) {
    for (const auto& s : detail::require<std::vector<std::string>>(jb, "basis.", "terms")) {
      BasisTerm t;
      try {
        t = BasisTerm::parse(s);
      } catch (const std::exception& e) {
        throw ConfigError("basis.terms", e.what());
      }
      if (t.coord < 0 || t.coord >= rc.model.state_dim)
        throw ConfigError("basis.terms", "term '" + s + "' references a coordinate outside the state");
      terms.push_back(t);
    }
  } else {
    for (int i = 0; i < rc.model.state_dim; ++i) terms.push_back({BasisTerm::Kind::Coord, i});
  }
  int degree = detail::optional<int>(jb, "basis.", "degree", 1);
  bool affine = detail::optional<bool>(jb, "basis.", "affine", true);
  int min_degree = detail::optional<int>(jb, "basis.", "min_degree", affine ? 0 : 1);
  if (degree < 1) throw ConfigError("basis.degree", "must be >= 1");
  if (min_degree < 0 || min_degree > degree) throw ConfigError("basis.min_degree", "must be in [0, degree]");
  rc.basis = BasisSet(std::move(terms), degree, min_degree, rc.model.input_dim);

  // mpc
  if (!j.contains("mpc")) throw ConfigError("mpc", "missing");
  const auto& jm = j.at("mpc");
  rc.mpc.horizon = detail::require<int>(jm, "mpc.", "horizon");
  if (rc.mpc.horizon < 1) throw ConfigError("mpc.horizon", "must be >= 1");
  rc.mpc.dt = detail::require<double>(jm, "mpc.", "dt");
  if (!(rc.mpc.dt > 0.0)) throw ConfigError("mpc.dt", "must be positive");
  rc.mpc.lambda = detail::require<double>(jm, "mpc.", "lambda");
  if (!(rc.mpc.lambda > 0.0 && rc.mpc.lambda <= 1.0))
    throw ConfigError("mpc.lambda", "must be in (0, 1]");
  rc.mpc.input_weights = detail::require_vec(jm, "mpc.", "input_weights", rc.model.input_dim);
  rc.mpc.state_weights = detail::require_vec(jm, "mpc.", "state_weights", rc.model.state_dim);
  rc.mpc.terminal_weights = detail::require_vec(jm, "mpc.", "terminal_weights", rc.model.state_dim);
  rc.mpc.fd_step = detail::optional<double>(jm, "mpc.", "fd_step", rc.mpc.fd_step);
  rc.mpc.max_iterations = detail::optional<int>(jm, "mpc.", "max_iterations", rc.mpc.max_iterations);
  rc.mpc.penalize_state_box =
      detail::optional<bool>(jm, "mpc.", "penalize_state_box", rc.mpc.penalize_state_box);
  try {
    rc.mpc.validate(rc.model.state_dim, rc.model.input_dim);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("mpc", e.what());
  }

  // falsifier
  if (!j.contains("falsifier")) throw ConfigError("falsifier", "missing");
  const auto& jf = j.at("falsifier");
  FalsifierConfig& fc = rc.cegis.falsifier;
  fc.random_budget = detail::require<long long>(jf, "falsifier.", "random_budget");
  fc.adversarial_budget = detail::require<long long>(jf, "falsifier.", "adversarial_budget");
  fc.random_block = detail::optional<long long>(jf, "falsifier.", "random_block",
                                                std::max<long long>(1, fc.random_budget / 10));
  fc.adversarial_block = detail::optional<long long>(
      jf, "falsifier.", "adversarial_block", std::max<long long>(1, fc.adversarial_budget / 10));
  fc.max_steps = detail::require<int>(jf, "falsifier.", "max_steps");
  fc.workers = detail::optional<int>(jf, "falsifier.", "workers", 1);
  fc.dt_sim = rc.mpc.dt;
  try {
    fc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("falsifier", e.what());
  }

  // learner
  if (j.contains("learner")) {
    const auto& jl = j.at("learner");
    rc.cegis.delta = detail::optional<double>(jl, "learner.", "delta", rc.cegis.delta);
    rc.cegis.delta_ball = detail::optional<double>(jl, "learner.", "delta_ball", rc.cegis.delta_ball);
    rc.cegis.init_trace_max_steps =
        detail::optional<int>(jl, "learner.", "init_trace_max_steps", rc.cegis.init_trace_max_steps);
    rc.cegis.demo_check_samples =
        detail::optional<int>(jl, "learner.", "demo_check_samples", rc.cegis.demo_check_samples);
  }
  rc.cegis.seed = detail::optional<std::uint64_t>(j, "", "seed", 0);
  try {
    rc.cegis.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("learner", e.what());
  }

  // baseline
  if (j.contains("baseline")) {
    const auto& jx = j.at("baseline");
    rc.baseline_traces = detail::optional<int>(jx, "baseline.", "traces", rc.baseline_traces);
    if (rc.baseline_traces < 1) throw ConfigError("baseline.traces", "must be >= 1");
    rc.baseline_max_steps =
        detail::optional<int>(jx, "baseline.", "max_steps", rc.baseline_max_steps);
    if (rc.baseline_max_steps < 1) throw ConfigError("baseline.max_steps", "must be >= 1");
  }
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config file " + path + " is not valid JSON: " + e.what());
  }
  auto slash = path.find_last_of('/');
  std::string dir = slash == std::string::npos ? "." : path.substr(0, slash);
  return parse_run_config(j, dir);
}

}  // namespace polsyn
