#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "polsyn/common.hpp"

namespace polsyn {

/// Continuous-time plant: rhs of dx/dt = F(x,u) plus the boxes describing
/// the state space X, admissible inputs U, initial set I and goal set G.
/// Immutable after construction; all evaluation entry points are pure.
struct PlantModel {
  std::string id;
  int state_dim = 0;
  int input_dim = 0;
  std::function<Vec(const Vec&, const Vec&)> rhs;
  Box state_box;
  Box input_box;
  Box initial_box;
  Box goal_box;

  // Optional control-affine decomposition F(x,u) = drift(x) + input_matrix(x) u.
  std::function<Vec(const Vec&)> drift;
  std::function<Mat(const Vec&)> input_matrix;

  bool has_affine_form() const { return static_cast<bool>(drift) && static_cast<bool>(input_matrix); }

  void validate() const {
    if (state_dim <= 0 || input_dim <= 0) throw std::invalid_argument("PlantModel: bad dimensions");
    if (!rhs) throw std::invalid_argument("PlantModel: missing rhs");
    if (state_box.dim() != state_dim || initial_box.dim() != state_dim || goal_box.dim() != state_dim)
      throw std::invalid_argument("PlantModel: state box dimension mismatch");
    if (input_box.dim() != input_dim) throw std::invalid_argument("PlantModel: input box dimension mismatch");
    if (!state_box.contains_box(initial_box)) throw std::invalid_argument("PlantModel: I not contained in X");
    if (!state_box.contains_box(goal_box)) throw std::invalid_argument("PlantModel: G not contained in X");
  }
};

/// Evaluate F(x,u). Inputs marginally outside U (by <= 1e-12) are clamped;
/// anything further out is the caller's bug and is reported.
inline Vec eval_rhs(const PlantModel& model, const Vec& x, const Vec& u_in) {
  if (x.size() != model.state_dim) throw std::invalid_argument("eval_rhs: state dimension mismatch");
  if (u_in.size() != model.input_dim) throw std::invalid_argument("eval_rhs: input dimension mismatch");
  Vec u = u_in;
  for (int i = 0; i < u.size(); ++i) {
    if (u[i] < model.input_box.lo[i]) {
      if (u[i] < model.input_box.lo[i] - 1e-12)
        throw std::invalid_argument("eval_rhs: input outside box at component " + std::to_string(i));
      u[i] = model.input_box.lo[i];
    } else if (u[i] > model.input_box.hi[i]) {
      if (u[i] > model.input_box.hi[i] + 1e-12)
        throw std::invalid_argument("eval_rhs: input outside box at component " + std::to_string(i));
      u[i] = model.input_box.hi[i];
    }
  }
  Vec dx = model.rhs(x, u);
  for (int i = 0; i < dx.size(); ++i)
    if (!std::isfinite(dx[i]))
      throw std::runtime_error("eval_rhs: non-finite derivative at component " + std::to_string(i));
  return dx;
}

/// One classical RK4 step with zero-order-hold input.
inline Vec discrete_step(const PlantModel& model, const Vec& x, const Vec& u, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("discrete_step: dt must be positive");
  Vec k1 = eval_rhs(model, x, u);
  Vec k2 = eval_rhs(model, x + 0.5 * dt * k1, u);
  Vec k3 = eval_rhs(model, x + 0.5 * dt * k2, u);
  Vec k4 = eval_rhs(model, x + dt * k3, u);
  Vec next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!all_finite(next)) throw std::runtime_error("discrete_step: non-finite state");
  return next;
}

/// Closed-loop trajectory sampled at a fixed step.
struct Trace {
  double dt = 0.0;
  std::vector<Vec> states;
  std::vector<Vec> inputs;  // one shorter than states

  double time_at(std::size_t k) const { return dt * static_cast<double>(k); }
};

struct SimResult {
  Trace trace;
  bool reached = false;
  bool diverged = false;
};

/// Simulate x' = F(x, policy(x)) from x0 until the goal box is entered or
/// max_steps elapse. Inputs are clamped to the input box before integration.
/// Escaping the safety envelope (default 10x the state box) terminates the
/// run with reached=false and the divergence flag set.
inline SimResult simulate_closed_loop(const PlantModel& model,
                                      const std::function<Vec(const Vec&)>& policy,
                                      const Vec& x0, double sim_dt, int max_steps,
                                      double safety_factor = 10.0) {
  SimResult out;
  out.trace.dt = sim_dt;
  Box envelope = model.state_box.scaled(safety_factor);
  Vec x = x0;
  out.trace.states.push_back(x);
  for (int k = 0; k < max_steps; ++k) {
    if (model.goal_box.contains(x)) {
      out.reached = true;
      return out;
    }
    if (!envelope.contains(x) || !all_finite(x)) {
      out.diverged = true;
      return out;
    }
    Vec u = model.input_box.clamp(policy(x));
    x = discrete_step(model, x, u, sim_dt);
    out.trace.inputs.push_back(u);
    out.trace.states.push_back(x);
  }
  if (model.goal_box.contains(x)) out.reached = true;
  return out;
}

}  // namespace polsyn
