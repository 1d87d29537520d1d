#pragma once

#include <optional>

#include "polsyn/dynamics.hpp"
#include "polsyn/polytope.hpp"

namespace polsyn {

/// Receding-horizon MPC demonstrator configuration. The running cost is
/// Q(u, x) = u.diag(input_weights).u + x.diag(state_weights).x and the
/// terminal cost H(x) = x.diag(terminal_weights).x.
struct MpcConfig {
  int horizon = 10;
  double dt = 0.2;
  Vec input_weights;
  Vec state_weights;
  Vec terminal_weights;
  double lambda = 0.5;        // fraction of the demonstrator's value decrease
  double fd_step = 1e-4;      // finite-difference step for the value gradient
  double grad_tol = 1e-7;     // relative gradient tolerance of the inner solver
  int max_iterations = 120;   // inner solver iteration cap
  double penalty_weight = 1e3;
  // Optional soft penalty on leaving the plant's state box during the
  // planned trajectory. Off by default: the quadratic objective has no state
  // constraints, and a penalty wall makes the value function (and hence the
  // demonstrator's feasible sets) needlessly stiff near the box boundary.
  bool penalize_state_box = false;
  double decrease_margin = 0.0;  // reported per-step decrease margin, not enforced

  void validate(int state_dim, int input_dim) const {
    if (horizon < 1) throw std::invalid_argument("MpcConfig: horizon must be >= 1");
    if (!(dt > 0.0)) throw std::invalid_argument("MpcConfig: dt must be positive");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("MpcConfig: lambda must be in (0,1]");
    if (!(fd_step > 0.0)) throw std::invalid_argument("MpcConfig: fd_step must be positive");
    if (input_weights.size() != input_dim || state_weights.size() != state_dim ||
        terminal_weights.size() != state_dim)
      throw std::invalid_argument("MpcConfig: weight vector dimension mismatch");
    if (input_weights.minCoeff() < 0.0 || state_weights.minCoeff() < 0.0 ||
        terminal_weights.minCoeff() < 0.0)
      throw std::invalid_argument("MpcConfig: weights must be nonnegative");
  }
};

struct MpcSolution {
  Mat u_seq;       // input_dim x horizon, clamped to the input box
  double value = 0.0;  // attained objective
  bool degraded = false;

  Vec first_input() const { return u_seq.col(0); }
  /// Warm start for the next receding-horizon step: shift left, repeat last.
  Mat shifted() const {
    Mat w = u_seq;
    w.leftCols(w.cols() - 1) = u_seq.rightCols(u_seq.cols() - 1);
    return w;
  }
};

/// One demonstrator query: optimal input, value, value gradient and the
/// feasible-input polytope carved out of the input box.
struct Demonstration {
  Vec x;
  Vec u_star;
  double value = 0.0;
  Vec grad;
  ControlPolytope polytope;
};

namespace detail {

/// RK4 step on the raw rhs without input-box checks; used only inside the
/// smooth optimization phase, where the penalty keeps inputs near the box.
inline Vec unclamped_step(const PlantModel& model, const Vec& x, const Vec& u, double dt) {
  Vec k1 = model.rhs(x, u);
  Vec k2 = model.rhs(x + 0.5 * dt * k1, u);
  Vec k3 = model.rhs(x + 0.5 * dt * k2, u);
  Vec k4 = model.rhs(x + dt * k3, u);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline Vec box_excess(const Box& box, const Vec& v) {
  return (v - box.hi).cwiseMax(0.0) + (box.lo - v).cwiseMax(0.0);
}

/// Rollout under zero-order-hold inputs clamped to the box. Returns the
/// running + terminal cost (plus the soft state-box penalty when enabled)
/// and fills `states` (horizon + 1 entries).
inline double mpc_rollout(const MpcConfig& cfg, const PlantModel& model, const Vec& x0,
                          const Mat& u_seq, std::vector<Vec>& states) {
  const int N = cfg.horizon;
  states.resize(N + 1);
  states[0] = x0;
  double cost = 0.0;
  for (int j = 0; j < N; ++j) {
    Vec u = model.input_box.clamp(u_seq.col(j));
    cost += u.dot(cfg.input_weights.cwiseProduct(u)) +
            states[j].dot(cfg.state_weights.cwiseProduct(states[j]));
    states[j + 1] = discrete_step(model, states[j], u, cfg.dt);
    if (cfg.penalize_state_box)
      cost += cfg.penalty_weight * box_excess(model.state_box, states[j + 1]).squaredNorm();
  }
  cost += states[N].dot(cfg.terminal_weights.cwiseProduct(states[N]));
  return cost;
}

/// Residual vector whose squared norm is the smoothed objective: quadratic
/// cost terms at the raw (unclamped) inputs plus input-box penalty terms.
inline Vec mpc_residuals(const MpcConfig& cfg, const PlantModel& model, const Vec& x0,
                         const Vec& u_flat) {
  const int N = cfg.horizon;
  const int m = model.input_dim;
  const int n = model.state_dim;
  Mat u_seq = Eigen::Map<const Mat>(u_flat.data(), m, N);

  const Vec squ = cfg.input_weights.cwiseSqrt();
  const Vec sqx = cfg.state_weights.cwiseSqrt();
  const Vec sqh = cfg.terminal_weights.cwiseSqrt();
  const double sqp = std::sqrt(cfg.penalty_weight);

  Vec r(N * (m + 2 * n) + n + N * m);
  int at = 0;
  Vec x = x0;
  for (int j = 0; j < N; ++j) {
    r.segment(at, m) = squ.cwiseProduct(u_seq.col(j));
    at += m;
    r.segment(at, n) = sqx.cwiseProduct(x);
    at += n;
    x = unclamped_step(model, x, u_seq.col(j), cfg.dt);
    if (cfg.penalize_state_box) r.segment(at, n) = sqp * box_excess(model.state_box, x);
    else r.segment(at, n).setZero();
    at += n;
  }
  r.segment(at, n) = sqh.cwiseProduct(x);
  at += n;
  for (int j = 0; j < N; ++j) {
    r.segment(at, m) = sqp * box_excess(model.input_box, u_seq.col(j));
    at += m;
  }
  return r;
}

struct LmRun {
  Vec u;
  double cost = std::numeric_limits<double>::infinity();
  bool converged = false;
};

/// Levenberg-Marquardt on the smoothed objective from one initialization.
inline LmRun lm_minimize(const MpcConfig& cfg, const PlantModel& model, const Vec& x,
                         Vec u, int max_iterations) {
  const int dof = static_cast<int>(u.size());
  LmRun run;
  Vec r = mpc_residuals(cfg, model, x, u);
  double cost = r.squaredNorm();
  double mu = 1e-4;
  bool converged = false;

  for (int it = 0; it < max_iterations; ++it) {
    // forward-difference Jacobian of the residual vector
    Mat J(r.size(), dof);
    for (int k = 0; k < dof; ++k) {
      const double eps = 1e-7 * (1.0 + std::abs(u[k]));
      Vec up = u;
      up[k] += eps;
      J.col(k) = (mpc_residuals(cfg, model, x, up) - r) / eps;
    }
    Vec g = 2.0 * J.transpose() * r;
    if (g.cwiseAbs().maxCoeff() <= cfg.grad_tol * (1.0 + cost)) {
      converged = true;
      break;
    }
    Mat JtJ = J.transpose() * J;
    bool stepped = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Mat H = JtJ;
      H.diagonal().array() += mu * (1.0 + JtJ.diagonal().array());
      Vec du = H.ldlt().solve(-0.5 * g);
      Vec un = u + du;
      Vec rn = mpc_residuals(cfg, model, x, un);
      double cn = rn.squaredNorm();
      if (std::isfinite(cn) && cn < cost) {
        u = un;
        r = rn;
        cost = cn;
        mu = std::max(1e-12, mu / 3.0);
        stepped = true;
        break;
      }
      mu *= 4.0;
    }
    if (!stepped) {
      Vec gcheck = 2.0 * J.transpose() * r;
      converged = gcheck.cwiseAbs().maxCoeff() <= 10.0 * cfg.grad_tol * (1.0 + cost);
      break;
    }
  }
  run.u = std::move(u);
  run.cost = cost;
  run.converged = converged;
  return run;
}

/// Deterministic constant-sequence initializations: zero plus the input-box
/// corners (all sign corners for few inputs, otherwise one channel at a
/// time). These catch aggressive bang-bang basins that continuation misses.
inline std::vector<Vec> restart_levels(const Box& input_box) {
  const int m = input_box.dim();
  std::vector<Vec> levels;
  levels.push_back(Vec::Zero(m));
  if (m <= 4) {
    for (int mask = 0; mask < (1 << m); ++mask) {
      Vec u(m);
      for (int i = 0; i < m; ++i) u[i] = (mask >> i) & 1 ? input_box.hi[i] : input_box.lo[i];
      levels.push_back(u);
    }
  } else {
    for (int i = 0; i < m; ++i) {
      Vec u = Vec::Zero(m);
      u[i] = input_box.hi[i];
      levels.push_back(u);
      u[i] = input_box.lo[i];
      levels.push_back(u);
    }
  }
  return levels;
}

/// Horizon continuation: solve the 1-step problem, then repeatedly extend
/// the horizon by one step, warm-starting from the previous solution with
/// its last input repeated. Each subproblem stays close to the previous
/// optimum, which reliably tracks the good basin of the nonconvex landscape.
inline LmRun horizon_continuation(const MpcConfig& cfg, const PlantModel& model, const Vec& x) {
  const int m = model.input_dim;
  LmRun run;
  Vec u;
  for (int N = 1; N <= cfg.horizon; ++N) {
    MpcConfig stage = cfg;
    stage.horizon = N;
    Vec u0 = Vec::Zero(m * N);
    if (N > 1) {
      u0.head(m * (N - 1)) = u;
      u0.tail(m) = u.tail(m);
    }
    run = lm_minimize(stage, model, x, u0, cfg.max_iterations);
    u = run.u;
  }
  return run;
}

}  // namespace detail

/// Solve the finite-horizon trajectory optimization by Levenberg-Marquardt
/// over the stacked input sequence (single shooting, dynamics substituted),
/// with a smooth penalty for the input box and final clamping. The problem
/// is nonconvex, so fresh solves multi-start from horizon continuation plus
/// constant-sequence candidates; a supplied warm start is optimized as one
/// more candidate and the lowest cost wins. Returns the clamped input
/// sequence and the attained objective.
inline MpcSolution solve_mpc(const MpcConfig& cfg, const PlantModel& model, const Vec& x,
                             const std::optional<Mat>& warm_start = std::nullopt,
                             bool multi_start = true) {
  const int N = cfg.horizon;
  const int m = model.input_dim;
  const int dof = N * m;

  detail::LmRun best;
  if (warm_start && warm_start->rows() == m && warm_start->cols() == N)
    best = detail::lm_minimize(cfg, model, x, Eigen::Map<const Vec>(warm_start->data(), dof),
                               cfg.max_iterations);
  if (multi_start || best.u.size() == 0) {
    detail::LmRun cont = detail::horizon_continuation(cfg, model, x);
    if (cont.cost < best.cost) best = std::move(cont);
    for (const Vec& level : detail::restart_levels(model.input_box)) {
      detail::LmRun run = detail::lm_minimize(cfg, model, x, level.replicate(N, 1),
                                              cfg.max_iterations);
      if (run.cost < best.cost) best = std::move(run);
    }
  }
  if (!best.converged) best = detail::lm_minimize(cfg, model, x, best.u, cfg.max_iterations);

  MpcSolution sol;
  Mat u_seq = Eigen::Map<const Mat>(best.u.data(), m, N);
  for (int j = 0; j < N; ++j) u_seq.col(j) = model.input_box.clamp(u_seq.col(j));
  sol.u_seq = u_seq;
  std::vector<Vec> states;
  sol.value = detail::mpc_rollout(cfg, model, x, u_seq, states);
  if (!std::isfinite(sol.value)) throw std::runtime_error("solve_mpc: non-finite rollout");
  sol.degraded = !best.converged;
  return sol;
}

/// Central finite-difference estimate of the value gradient, each probe
/// re-solving the MPC warm-started from the nominal solution. Probes run
/// single-start so they stay in the nominal solution's basin.
inline Vec value_gradient(const MpcConfig& cfg, const PlantModel& model, const Vec& x,
                          const std::optional<Mat>& warm_start = std::nullopt) {
  MpcSolution nominal = solve_mpc(cfg, model, x, warm_start);
  const int n = model.state_dim;
  for (double h : {cfg.fd_step, 10.0 * cfg.fd_step}) {
    Vec grad(n);
    bool degraded = nominal.degraded;
    for (int i = 0; i < n && !degraded; ++i) {
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      MpcSolution sp = solve_mpc(cfg, model, xp, nominal.u_seq, /*multi_start=*/false);
      MpcSolution sm = solve_mpc(cfg, model, xm, nominal.u_seq, /*multi_start=*/false);
      degraded = sp.degraded || sm.degraded;
      grad[i] = (sp.value - sm.value) / (2.0 * h);
    }
    if (!degraded) return grad;
  }
  throw std::runtime_error("value_gradient: degraded probe solves at both steps");
}

/// Demonstrator query: solves the MPC, estimates the value gradient and
/// emits the feasible-input polytope
///   { u in U | grad.F(x,u) <= lambda grad.F(x,u*) }
/// which is a half-space intersected with the input box for control-affine
/// plants.
inline Demonstration feasible_set(const MpcConfig& cfg, const PlantModel& model, const Vec& x,
                                  const std::optional<Mat>& warm_start = std::nullopt) {
  if (!model.has_affine_form())
    throw std::invalid_argument("feasible_set: model must supply a control-affine decomposition");
  if (model.goal_box.contains_interior(x))
    throw std::invalid_argument("feasible_set: state in the interior of the goal set");

  MpcSolution sol = solve_mpc(cfg, model, x, warm_start);
  Vec grad = value_gradient(cfg, model, x, sol.u_seq);

  Vec u_star = sol.first_input();
  double decrease = grad.dot(eval_rhs(model, x, u_star));
  if (!(decrease < 0.0))
    throw std::runtime_error("feasible_set: demonstrator not decreasing at x (grad.F = " +
                             std::to_string(decrease) + ")");

  Vec a = model.input_matrix(x).transpose() * grad;
  double c = cfg.lambda * decrease - grad.dot(model.drift(x));

  Demonstration d;
  d.x = x;
  d.u_star = u_star;
  d.value = sol.value;
  d.grad = grad;
  d.polytope = ControlPolytope::half_space_with_box(a, c, model.input_box);
  return d;
}

/// Receding-horizon demonstrator rollout: applies the first optimal input at
/// every step, warm-starting each solve from the previous shifted sequence.
struct DemoTraceStep {
  Vec x;
  Vec u_star;
  double value = 0.0;
  bool degraded = false;
};

struct DemoTrace {
  std::vector<DemoTraceStep> steps;  // one per visited non-goal state
  Vec final_state;
  bool reached = false;
};

inline DemoTrace demonstrator_rollout(const MpcConfig& cfg, const PlantModel& model, const Vec& x0,
                                      int max_steps) {
  DemoTrace out;
  Vec x = x0;
  std::optional<Mat> warm;
  for (int k = 0; k < max_steps; ++k) {
    if (model.goal_box.contains(x)) {
      out.reached = true;
      break;
    }
    MpcSolution sol = solve_mpc(cfg, model, x, warm);
    out.steps.push_back({x, sol.first_input(), sol.value, sol.degraded});
    x = discrete_step(model, x, sol.first_input(), cfg.dt);
    warm = sol.shifted();
  }
  if (model.goal_box.contains(x)) out.reached = true;
  out.final_state = x;
  return out;
}

}  // namespace polsyn
