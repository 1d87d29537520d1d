#include <chrono>
#include <iostream>

#include <CLI11.hpp>

#include "polsyn/baseline.hpp"
#include "polsyn/io.hpp"

using namespace polsyn;

namespace {

int exit_code_for(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Success: return 0;
    case OutcomeKind::NoCandidate: return 2;
    default: return 3;
  }
}

RunConfig load_with_env(const std::string& config_path) {
  RunConfig rc = load_run_config(config_path);
  rc.cegis.falsifier.workers = env_workers(rc.cegis.falsifier.workers);
  return rc;
}

int cmd_learn(const std::string& config_path, const std::string& root_flag) {
  RunConfig rc = load_with_env(config_path);
  std::string root = root_flag.empty() ? run_root() : root_flag;
  std::string dir = make_run_dir(root, rc.name, rc.cegis.seed);
  std::cout << "run directory: " << dir << "\n";

  auto t0 = std::chrono::steady_clock::now();
  Outcome o = cegis_run(rc.model, rc.basis, rc.mpc, rc.cegis);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  persist_learn_run(dir, rc, o, secs);

  std::cout << "outcome: " << outcome_name(o.kind)
            << (o.reason.empty() ? "" : " (" + o.reason + ")") << "\n"
            << "iterations: " << o.iterations << "\n"
            << "samples: " << (o.log.empty() ? 0 : o.log.back().sample_count) << "\n"
            << "wall seconds: " << secs << "\n";
  if (o.kind == OutcomeKind::Success) std::cout << "policy: " << dir << "/policy.json\n";
  return exit_code_for(o.kind);
}

int cmd_falsify(const std::string& policy_path, const std::string& config_path) {
  RunConfig rc = load_with_env(config_path);
  std::ifstream in(policy_path);
  if (!in) throw std::runtime_error("cannot open policy file " + policy_path);
  PolicyParams policy = policy_from_json(nlohmann::json::parse(in));
  if (!policy.plant_id.empty() && policy.plant_id != rc.model.id)
    throw std::runtime_error("policy was learned for plant '" + policy.plant_id +
                             "', config selects '" + rc.model.id + "'");

  FalsifierConfig fcfg = rc.cegis.falsifier;
  fcfg.seed = mix_seed(rc.cegis.seed, 0xfa150ull);
  Verdict v = falsify(fcfg, rc.mpc, rc.model, policy);
  std::cout << "random samples used: " << v.stats.random_used << "\n"
            << "adversarial iterations used: " << v.stats.adversarial_used << "\n";
  if (v.counterexample) {
    std::cout << "counterexample found, x0 =";
    for (int i = 0; i < v.x0.size(); ++i) std::cout << " " << v.x0[i];
    std::cout << "\n";
    return 4;
  }
  std::cout << "no counterexample found (policy likely correct)\n";
  return 0;
}

int cmd_demo_check(const std::string& config_path, int samples) {
  RunConfig rc = load_with_env(config_path);
  auto rng = make_rng(rc.cegis.seed, 0xdc21ull);
  int checked = 0, violations = 0;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Vec x = rc.model.initial_box.sample(rng);
    if (rc.model.goal_box.contains(x)) continue;
    MpcSolution sol = solve_mpc(rc.mpc, rc.model, x);
    Vec xn = discrete_step(rc.model, x, sol.first_input(), rc.mpc.dt);
    if (rc.model.goal_box.contains(xn)) continue;
    MpcSolution next = solve_mpc(rc.mpc, rc.model, xn, sol.shifted());
    ++checked;
    if (!(next.value < sol.value)) {
      ++violations;
      worst = std::max(worst, next.value - sol.value);
    }
  }
  std::cout << violations << " decrease violations / " << checked << " checked samples (of "
            << samples << " drawn)\n";
  if (violations > 0) {
    std::cout << "worst increase: " << worst << "\n";
    return 4;
  }
  return 0;
}

int cmd_baseline(const std::string& config_path, int traces_flag, const std::string& root_flag) {
  RunConfig rc = load_with_env(config_path);
  int M = traces_flag > 0 ? traces_flag : rc.baseline_traces;
  BaselineReport rep =
      run_baseline(rc.mpc, rc.model, rc.basis, M, rc.cegis.delta, rc.cegis.falsifier,
                   rc.cegis.seed, rc.baseline_max_steps, rc.cegis.falsifier.workers);

  nlohmann::json j{{"traces", rep.traces},
                   {"pairs", rep.pairs},
                   {"saturation_fraction", rep.saturation},
                   {"residual_rms", rep.residual_rms},
                   {"rank_deficient", rep.rank_deficient},
                   {"counterexample", rep.counterexample},
                   {"falsifier",
                    {{"random_used", rep.falsifier_stats.random_used},
                     {"adversarial_used", rep.falsifier_stats.adversarial_used}}}};
  if (rep.counterexample) j["counterexample_x0"] = to_std(rep.counterexample_x0);

  std::string root = root_flag.empty() ? run_root() : root_flag;
  std::string dir = make_run_dir(root, rc.name + "-baseline", rc.cegis.seed);
  write_json_file(dir + "/config.json", rc.raw);
  write_json_file(dir + "/report.json", j);
  write_json_file(dir + "/policy.json", policy_to_json(rep.policy));

  std::cout << "traces: " << rep.traces << "  pairs: " << rep.pairs << "\n"
            << "saturation fraction: " << rep.saturation << "\n"
            << "fit residual rms: " << rep.residual_rms << "\n"
            << "falsifier verdict: "
            << (rep.counterexample ? "counterexample found" : "no counterexample") << "\n"
            << "report: " << dir << "/report.json\n";
  return 0;
}

int cmd_export(const std::string& run_dir, int traces) {
  int rows = export_run(run_dir, traces);
  std::cout << "wrote " << run_dir << "/volume.csv (" << rows << " rows) and " << traces
            << " trace CSVs\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterexample-guided learning of feedback policies from an MPC demonstrator"};
  app.require_subcommand(1);

  std::string config_path, policy_path, run_dir, root_flag;
  int samples = 20, traces_flag = 0, export_traces = 3;

  auto* learn = app.add_subcommand("learn", "Run the full learning loop on a config file");
  learn->add_option("config", config_path, "run-config JSON file")->required();
  learn->add_option("--run-root", root_flag, "run-directory root (default: $POLSYN_RUN_ROOT or ./runs)");

  auto* falsify_cmd = app.add_subcommand("falsify", "Falsify a stored policy against a config");
  falsify_cmd->add_option("policy", policy_path, "policy JSON file")->required();
  falsify_cmd->add_option("config", config_path, "run-config JSON file")->required();

  auto* demo = app.add_subcommand("demo-check", "Check demonstrator value decrease on sampled starts");
  demo->add_option("config", config_path, "run-config JSON file")->required();
  demo->add_option("--samples", samples, "number of initial states to draw");

  auto* baseline = app.add_subcommand("baseline", "Fit and falsify the least-squares regression baseline");
  baseline->add_option("config", config_path, "run-config JSON file")->required();
  baseline->add_option("--traces", traces_flag, "demonstrator traces to collect (overrides config)");
  baseline->add_option("--run-root", root_flag, "run-directory root");

  auto* exp = app.add_subcommand("export", "Export plot-ready CSVs from a finished run directory");
  exp->add_option("run_dir", run_dir, "run directory written by 'learn'")->required();
  exp->add_option("--traces", export_traces, "closed-loop traces to simulate");

  CLI11_PARSE(app, argc, argv);

  try {
    if (learn->parsed()) return cmd_learn(config_path, root_flag);
    if (falsify_cmd->parsed()) return cmd_falsify(policy_path, config_path);
    if (demo->parsed()) return cmd_demo_check(config_path, samples);
    if (baseline->parsed()) return cmd_baseline(config_path, traces_flag, root_flag);
    if (exp->parsed()) return cmd_export(run_dir, export_traces);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
