#pragma once

#include <chrono>
#include <string>

#include "polsyn/falsifier.hpp"
#include "polsyn/learner.hpp"
#include "polsyn/witness.hpp"

namespace polsyn {

struct CegisConfig {
  double delta = 100.0;          // half-width of the initial parameter box
  double delta_ball = 1e-3;      // termination ball radius
  double compat_tol = 1e-8;      // candidate-vs-sample compatibility recheck
  int demo_check_samples = 20;   // demonstrator sanity samples before the run
  int init_trace_max_steps = 300;
  std::uint64_t seed = 0;
  FalsifierConfig falsifier;     // dt_sim is overridden with the MPC step

  void validate() const {
    if (!(delta > delta_ball && delta_ball > 0.0))
      throw std::invalid_argument("CegisConfig: need delta > delta_ball > 0");
    if (demo_check_samples < 0) throw std::invalid_argument("CegisConfig: bad demo_check_samples");
    if (init_trace_max_steps < 1)
      throw std::invalid_argument("CegisConfig: init_trace_max_steps must be >= 1");
  }
};

struct IterationRecord {
  int iteration = 0;
  int sample_count = 0;
  double log_volume = 0.0;       // log det B of the MVE
  double min_axis = 0.0;
  bool counterexample = false;
  Vec counterexample_x0;  // empty when the falsifier accepted
  Vec witness_x;          // empty when the falsifier accepted
  double witness_residual = 0.0;
  long long random_used = 0;
  long long adversarial_used = 0;
  double wall_seconds = 0.0;
};

enum class OutcomeKind { Success, NoCandidate, BoundExceeded };

inline const char* outcome_name(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Success: return "Success";
    case OutcomeKind::NoCandidate: return "NoCandidate";
    default: return "BoundExceeded";
  }
}

struct Outcome {
  OutcomeKind kind = OutcomeKind::NoCandidate;
  PolicyParams policy;           // the successful policy, or the last candidate
  FalsifierStats final_stats;    // falsifier stats of the accepting run
  std::string reason;            // "Infeasible" / "TooThin" for NoCandidate
  int iterations = 0;
  std::vector<IterationRecord> log;
  // Success means the falsifier exhausted its budgets without finding a
  // counterexample; it is not a soundness proof.
  std::string semantics = "likely-correct";
};

/// Pre-run sanity check: the demonstrator's value must decrease across one
/// receding-horizon step from random initial states. Throws on violation.
inline void demo_check(const MpcConfig& mpc_cfg, const PlantModel& model, int samples,
                       std::uint64_t seed) {
  auto rng = make_rng(seed, 0xdc21ull);
  for (int s = 0; s < samples; ++s) {
    Vec x = model.initial_box.sample(rng);
    if (model.goal_box.contains(x)) continue;
    MpcSolution sol = solve_mpc(mpc_cfg, model, x);
    Vec xn = discrete_step(model, x, sol.first_input(), mpc_cfg.dt);
    if (model.goal_box.contains(xn)) continue;
    MpcSolution next = solve_mpc(mpc_cfg, model, xn, sol.shifted());
    if (!(next.value < sol.value))
      throw std::runtime_error("demo_check: demonstrator value not decreasing at sample " +
                               std::to_string(s) + " (" + std::to_string(sol.value) + " -> " +
                               std::to_string(next.value) + ")");
  }
}

/// The counterexample-guided loop: initialize the sample set from one
/// demonstrator trace, then iterate MVE-center candidate -> falsifier ->
/// witness -> sample update until the falsifier accepts, the parameter
/// polyhedron collapses, or the theoretical iteration bound is exceeded.
inline Outcome cegis_run(const PlantModel& model, const BasisSet& basis, const MpcConfig& mpc_cfg,
                         const CegisConfig& cfg_in) {
  CegisConfig cfg = cfg_in;
  cfg.validate();
  mpc_cfg.validate(model.state_dim, model.input_dim);
  cfg.falsifier.dt_sim = mpc_cfg.dt;  // witness scan requires the MPC step

  const int K = basis.param_count();
  if (K < 2) throw std::invalid_argument("cegis_run: need at least two parameters");

  demo_check(mpc_cfg, model, cfg.demo_check_samples, cfg.seed);

  Outcome out;
  out.policy = PolicyParams(basis, Vec::Zero(K));
  out.policy.plant_id = model.id;

  // O_0: demonstrations along one receding-horizon trace
  SampleSet samples;
  ParamPolyhedron poly(K, cfg.delta);
  {
    auto rng = make_rng(cfg.seed, 0x1417ull);
    Vec x0 = model.initial_box.sample(rng);
    DemoTrace trace = demonstrator_rollout(mpc_cfg, model, x0, cfg.init_trace_max_steps);
    if (!trace.reached)
      throw std::runtime_error("cegis_run: initial demonstrator trace failed to reach the goal");
    for (const DemoTraceStep& step : trace.steps) {
      Demonstration d = feasible_set(mpc_cfg, model, step.x);
      samples.add(step.x, d.polytope);
      poly = add_sample(poly, basis, step.x, d.polytope);
    }
  }

  const int bound = iteration_bound(K, cfg.delta, cfg.delta_ball);
  for (int i = 0;; ++i) {
    if (i > bound) {
      out.kind = OutcomeKind::BoundExceeded;
      out.iterations = i;
      return out;
    }
    IterationRecord rec;
    rec.iteration = i;
    rec.sample_count = samples.size();
    auto t0 = std::chrono::steady_clock::now();

    LearnerResult lr = mve(poly, cfg.delta_ball);
    if (lr.verdict != LearnerVerdict::Center) {
      out.kind = OutcomeKind::NoCandidate;
      out.reason = lr.verdict == LearnerVerdict::Infeasible ? "Infeasible" : "TooThin";
      out.iterations = i;
      out.log.push_back(rec);
      return out;
    }
    rec.log_volume = lr.ellipsoid.log_volume_factor();
    rec.min_axis = lr.min_axis;

    PolicyParams candidate(basis, lr.ellipsoid.center);
    candidate.plant_id = model.id;
    candidate.iterations = i;

    // Def. 4 recheck: the candidate must be compatible with every sample
    for (const auto& entry : samples.entries) {
      Vec u = eval_policy_raw(candidate, entry.x);
      if (entry.polytope.violation(u) > cfg.compat_tol)
        throw std::runtime_error("cegis_run: MVE center incompatible with sample set (residual " +
                                 std::to_string(entry.polytope.violation(u)) + ")");
    }

    FalsifierConfig fcfg = cfg.falsifier;
    fcfg.seed = mix_seed(cfg.seed, 0xfa15ull + static_cast<std::uint64_t>(i));
    Verdict verdict = falsify(fcfg, mpc_cfg, model, candidate);
    rec.random_used = verdict.stats.random_used;
    rec.adversarial_used = verdict.stats.adversarial_used;

    if (!verdict.counterexample) {
      rec.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      out.log.push_back(rec);
      out.kind = OutcomeKind::Success;
      out.policy = candidate;
      out.final_stats = verdict.stats;
      out.iterations = i + 1;
      return out;
    }
    rec.counterexample = true;
    rec.counterexample_x0 = verdict.x0;

    Witness w = [&]() {
      try {
        return extract_witness(verdict.sim.trace, candidate, mpc_cfg, model, cfg.compat_tol);
      } catch (const WitnessNotFound&) {
        // one borderline-compatible trace should not kill the run: retry the
        // falsifier with a fresh seed before giving up
        FalsifierConfig retry = fcfg;
        retry.seed = mix_seed(fcfg.seed, 0x9e37ull);
        Verdict second = falsify(retry, mpc_cfg, model, candidate);
        if (!second.counterexample)
          throw std::runtime_error(
              "cegis_run: witness not found and the retry falsifier found no counterexample");
        return extract_witness(second.sim.trace, candidate, mpc_cfg, model, cfg.compat_tol);
      }
    }();
    rec.witness_x = w.x;
    rec.witness_residual = w.residual;

    samples.add(w.x, w.polytope);
    poly = add_sample(poly, basis, w.x, w.polytope);
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.log.push_back(rec);
  }
}

}  // namespace polsyn
