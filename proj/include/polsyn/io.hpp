#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "polsyn/cegis.hpp"
#include "polsyn/config.hpp"

namespace polsyn {

/// Root directory for run artifacts; overridable via POLSYN_RUN_ROOT.
inline std::string run_root() {
  if (const char* env = std::getenv("POLSYN_RUN_ROOT"); env && *env) return env;
  return "runs";
}

/// Worker-count override via POLSYN_WORKERS (falls back to the config value).
inline int env_workers(int fallback) {
  if (const char* env = std::getenv("POLSYN_WORKERS"); env && *env) {
    int w = std::atoi(env);
    if (w >= 1) return w;
  }
  return fallback;
}

/// Creates <root>/<name>-<timestamp>-seed<seed>[-<k>] and returns its path.
inline std::string make_run_dir(const std::string& root, const std::string& name,
                                std::uint64_t seed) {
  auto now = std::chrono::system_clock::now();
  std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream base;
  base << name << "-" << std::put_time(&tm, "%Y%m%d-%H%M%S") << "-seed" << seed;
  std::filesystem::path dir = std::filesystem::path(root) / base.str();
  for (int k = 1; std::filesystem::exists(dir); ++k)
    dir = std::filesystem::path(root) / (base.str() + "-" + std::to_string(k));
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline std::vector<double> to_std(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline nlohmann::json iteration_to_json(const IterationRecord& r) {
  nlohmann::json j{{"iteration", r.iteration},
                   {"samples", r.sample_count},
                   {"log_volume", r.log_volume},
                   {"min_axis", r.min_axis},
                   {"counterexample", r.counterexample},
                   {"witness_residual", r.witness_residual},
                   {"random_used", r.random_used},
                   {"adversarial_used", r.adversarial_used},
                   {"wall_seconds", r.wall_seconds}};
  if (r.counterexample_x0.size() > 0) j["counterexample_x0"] = to_std(r.counterexample_x0);
  if (r.witness_x.size() > 0) j["witness_x"] = to_std(r.witness_x);
  return j;
}

inline nlohmann::json outcome_to_json(const Outcome& o, double wall_seconds) {
  return nlohmann::json{{"outcome", outcome_name(o.kind)},
                        {"reason", o.reason},
                        {"iterations", o.iterations},
                        {"semantics", o.semantics},
                        {"wall_seconds", wall_seconds},
                        {"falsifier",
                         {{"random_used", o.final_stats.random_used},
                          {"adversarial_used", o.final_stats.adversarial_used},
                          {"seed", o.final_stats.seed}}}};
}

inline void write_iteration_log(const std::string& path, const std::vector<IterationRecord>& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const IterationRecord& r : log) out << iteration_to_json(r).dump() << "\n";
}

inline void write_trace_csv(const std::string& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(17);
  const int n = trace.states.empty() ? 0 : static_cast<int>(trace.states[0].size());
  out << "t";
  for (int i = 0; i < n; ++i) out << ",x" << i;
  out << "\n";
  for (std::size_t k = 0; k < trace.states.size(); ++k) {
    out << k * trace.dt;
    for (int i = 0; i < n; ++i) out << "," << trace.states[k][i];
    out << "\n";
  }
}

/// Persist a finished learning run: config snapshot, outcome, policy,
/// per-iteration JSONL and the counterexample/witness state table.
inline void persist_learn_run(const std::string& dir, const RunConfig& rc, const Outcome& o,
                              double wall_seconds) {
  write_json_file(dir + "/config.json", rc.raw);
  write_json_file(dir + "/outcome.json", outcome_to_json(o, wall_seconds));
  PolicyParams policy = o.policy;
  policy.run_id = std::filesystem::path(dir).filename().string();
  write_json_file(dir + "/policy.json", policy_to_json(policy));
  write_iteration_log(dir + "/iterations.jsonl", o.log);

  std::ofstream csv(dir + "/counterexamples.csv");
  csv << std::setprecision(17);
  const int n = rc.model.state_dim;
  csv << "iteration";
  for (int i = 0; i < n; ++i) csv << ",ce_x" << i;
  for (int i = 0; i < n; ++i) csv << ",witness_x" << i;
  csv << "\n";
  for (const IterationRecord& r : o.log) {
    if (!r.counterexample) continue;
    csv << r.iteration;
    for (int i = 0; i < n; ++i) csv << "," << (r.counterexample_x0.size() > 0 ? r.counterexample_x0[i] : 0.0);
    for (int i = 0; i < n; ++i) csv << "," << (r.witness_x.size() > 0 ? r.witness_x[i] : 0.0);
    csv << "\n";
  }
}

/// Re-derive plot-ready CSVs from a finished run directory: the per-iteration
/// ellipsoid volume table, and closed-loop traces of the stored policy from a
/// few sampled initial states.
inline int export_run(const std::string& dir, int traces = 3, std::uint64_t trace_seed = 0) {
  RunConfig rc = load_run_config(dir + "/config.json");
  std::ifstream log_in(dir + "/iterations.jsonl");
  if (!log_in) throw std::runtime_error("cannot open " + dir + "/iterations.jsonl");

  std::ofstream vol(dir + "/volume.csv");
  vol << std::setprecision(17) << "iteration,samples,log_volume,min_axis,counterexample\n";
  int rows = 0;
  std::string line;
  while (std::getline(log_in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    vol << j.at("iteration").get<int>() << "," << j.at("samples").get<int>() << ","
        << j.at("log_volume").get<double>() << "," << j.at("min_axis").get<double>() << ","
        << (j.at("counterexample").get<bool>() ? 1 : 0) << "\n";
    ++rows;
  }

  std::ifstream pol_in(dir + "/policy.json");
  if (pol_in) {
    PolicyParams policy = policy_from_json(nlohmann::json::parse(pol_in));
    auto rng = make_rng(trace_seed, 0xe4b0ull);
    for (int t = 0; t < traces; ++t) {
      Vec x0 = rc.model.initial_box.sample(rng);
      SimResult sim = simulate_closed_loop(
          rc.model, [&](const Vec& x) { return eval_policy(policy, x, rc.model.input_box); }, x0,
          rc.mpc.dt, rc.cegis.falsifier.max_steps);
      write_trace_csv(dir + "/trace" + std::to_string(t) + ".csv", sim.trace);
    }
  }
  return rows;
}

}  // namespace polsyn
