#pragma once

#include "polsyn/mpc.hpp"

namespace polsyn {

struct Witness {
  Vec x;
  ControlPolytope polytope;
  double residual = 0.0;  // half-space violation of the policy input at x
  int step = 0;           // trace index where the incompatibility was found
};

/// Error raised when a violating trace contains no state at which the policy
/// is incompatible with the demonstrator; carries the largest constraint
/// residual seen (a near-zero value means the trace is numerically
/// borderline-compatible throughout).
struct WitnessNotFound : std::runtime_error {
  double max_residual;
  explicit WitnessNotFound(double r)
      : std::runtime_error("witness not found: no incompatible state along the trace "
                           "(max constraint residual " +
                           std::to_string(r) + ")"),
        max_residual(r) {}
};

/// Scans the counterexample trace state by state (the trace must be sampled
/// at the demonstrator's MPC step); at each state outside the interior of
/// the goal set, queries the demonstrator's feasible input set. Among the
/// states where the policy's input violates that set by more than `tol`,
/// returns the one with the smallest demonstrator value: constraints at
/// near-goal states are the gentlest, so this choice cuts the violating
/// candidate while removing as little of the parameter polyhedron as
/// possible and keeps the learner feasible for longer.
inline Witness extract_witness(const Trace& trace, const std::function<Vec(const Vec&)>& policy,
                               const MpcConfig& mpc_cfg, const PlantModel& model,
                               double tol = 1e-8) {
  if (trace.states.empty()) throw std::invalid_argument("extract_witness: empty trace");
  if (!(std::abs(trace.dt - mpc_cfg.dt) <= 1e-12 * (1.0 + mpc_cfg.dt)))
    throw std::invalid_argument("extract_witness: trace step must equal the MPC step");
  double max_residual = -std::numeric_limits<double>::infinity();
  Witness best;
  double best_value = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t k = 0; k < trace.states.size(); ++k) {
    const Vec& x = trace.states[k];
    if (model.goal_box.contains_interior(x)) continue;
    if (!model.state_box.contains(x, 1e-9)) continue;  // Eq. (1) is defined on X
    Demonstration d;
    try {
      d = feasible_set(mpc_cfg, model, x);
    } catch (const std::runtime_error&) {
      // the value function is nonsmooth at isolated states (competing local
      // optima), where the finite-difference gradient fails the decrease
      // check; skip those states rather than abort the scan
      continue;
    }
    Vec u = policy(x);
    double residual = d.polytope.violation(u);
    max_residual = std::max(max_residual, residual);
    if (residual > tol && d.value < best_value) {
      best_value = d.value;
      best = {x, std::move(d.polytope), residual, static_cast<int>(k)};
      found = true;
    }
  }
  if (!found) throw WitnessNotFound(max_residual);
  return best;
}

/// Convenience overload for parametric policies. The compatibility check
/// uses the raw (un-clamped) linear form: the learner's constraints are on
/// that form, and the demonstrator's polytopes lie inside the input box, so
/// a compatible parameter never needs the clamp at sample states.
inline Witness extract_witness(const Trace& trace, const PolicyParams& policy,
                               const MpcConfig& mpc_cfg, const PlantModel& model,
                               double tol = 1e-8) {
  return extract_witness(trace, [&](const Vec& x) { return eval_policy_raw(policy, x); },
                         mpc_cfg, model, tol);
}

}  // namespace polsyn
