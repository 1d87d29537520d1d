#pragma once

#include <functional>
#include <future>
#include <limits>

#include "polsyn/basis.hpp"
#include "polsyn/dynamics.hpp"
#include "polsyn/mpc.hpp"

namespace polsyn {

/// Falsifier configuration: a mass random-simulation phase interleaved with
/// adversarial ascent on the closed-loop cost, both over initial states in I.
struct FalsifierConfig {
  long long random_budget = 100000;     // phase-1 initial-state draws
  long long adversarial_budget = 1000;  // phase-2 ascent iterations
  long long random_block = 10000;       // draws per interleaved block
  long long adversarial_block = 100;    // ascent iterations per block
  double dt_sim = 0.05;                 // closed-loop simulation step
  int max_steps = 1000;                 // time budget in simulation steps
  std::uint64_t seed = 0;
  int workers = 1;                      // parallel workers for the random phase
  std::function<void(const Vec&)> on_adversarial_iterate;  // test/observability hook

  void validate() const {
    if (random_budget < 1 || adversarial_budget < 1)
      throw std::invalid_argument("FalsifierConfig: budgets must be >= 1");
    if (random_block < 1 || adversarial_block < 1)
      throw std::invalid_argument("FalsifierConfig: block sizes must be >= 1");
    if (!(dt_sim > 0.0)) throw std::invalid_argument("FalsifierConfig: dt_sim must be positive");
    if (max_steps < 1) throw std::invalid_argument("FalsifierConfig: max_steps must be >= 1");
    if (workers < 1) throw std::invalid_argument("FalsifierConfig: workers must be >= 1");
  }
};

struct FalsifierStats {
  long long random_used = 0;
  long long adversarial_used = 0;
  double worst_objective = -std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
};

/// Either a counterexample (initial state whose closed-loop trace misses the
/// goal within the time budget) or "likely correct" with the consumed budgets.
struct Verdict {
  bool counterexample = false;
  Vec x0;
  SimResult sim;
  long long draw_index = -1;  // phase-1 draw index; -1 when found by ascent
  FalsifierStats stats;
};

/// Closed-loop cost of the candidate policy from x0: the demonstrator's
/// quadratic running cost plus terminal cost over the MPC horizon, with
/// inputs fixed by the policy. Non-finite rollouts return +infinity.
inline double adversarial_objective(const MpcConfig& mpc_cfg, const PlantModel& model,
                                    const std::function<Vec(const Vec&)>& policy, const Vec& x0) {
  Vec x = x0;
  double cost = 0.0;
  for (int j = 0; j < mpc_cfg.horizon; ++j) {
    Vec u = model.input_box.clamp(policy(x));
    cost += u.dot(mpc_cfg.input_weights.cwiseProduct(u)) +
            x.dot(mpc_cfg.state_weights.cwiseProduct(x));
    if (!std::isfinite(cost) || !all_finite(x)) return std::numeric_limits<double>::infinity();
    x = discrete_step(model, x, u, mpc_cfg.dt);
  }
  cost += x.dot(mpc_cfg.terminal_weights.cwiseProduct(x));
  return std::isfinite(cost) ? cost : std::numeric_limits<double>::infinity();
}

namespace detail {

/// Simulates the closed loop and reports whether the trace is a violation.
inline bool violates(const FalsifierConfig& cfg, const PlantModel& model,
                     const std::function<Vec(const Vec&)>& policy, const Vec& x0,
                     SimResult* out = nullptr) {
  SimResult sim = simulate_closed_loop(model, policy, x0, cfg.dt_sim, cfg.max_steps);
  bool bad = !sim.reached;
  if (out) *out = std::move(sim);
  return bad;
}

struct AscentState {
  Vec x;
  double f = 0.0;
  Mat Hinv;  // BFGS inverse-Hessian approximation (of the negated objective)
  bool fresh = true;
};

}  // namespace detail

/// Searches for an initial state in I whose closed-loop trace under `policy`
/// fails to reach the goal: uniform random draws interleaved with projected
/// BFGS ascent (finite-difference gradients, random restarts) on the
/// closed-loop cost. Deterministic for a fixed seed; with parallel workers
/// the lowest failing draw index still wins.
inline Verdict falsify(const FalsifierConfig& cfg, const MpcConfig& mpc_cfg,
                       const PlantModel& model, const std::function<Vec(const Vec&)>& policy) {
  cfg.validate();
  Verdict v;
  v.stats.seed = cfg.seed;

  // degenerate config: every start is already in the goal
  if (model.goal_box.contains_box(model.initial_box)) return v;

  auto rng_random = make_rng(cfg.seed, 0x8a5cull);
  auto rng_adv = make_rng(cfg.seed, 0xad7eull);

  const int n = model.state_dim;
  auto objective = [&](const Vec& x) { return adversarial_objective(mpc_cfg, model, policy, x); };

  detail::AscentState ascent;
  auto restart_ascent = [&]() {
    ascent.x = model.initial_box.sample(rng_adv);
    ascent.f = objective(ascent.x);
    ascent.Hinv = Mat::Identity(n, n);
    ascent.fresh = true;
  };
  restart_ascent();

  auto fd_gradient = [&](const Vec& x, double fx) {
    Vec g(n);
    for (int i = 0; i < n; ++i) {
      const double h = 1e-6 * (1.0 + std::abs(x[i]));
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      double fp = objective(xp), fm = objective(xm);
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        g[i] = std::isfinite(fx) ? 0.0 : 1.0;
        continue;
      }
      g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
  };

  while (v.stats.random_used < cfg.random_budget ||
         v.stats.adversarial_used < cfg.adversarial_budget) {
    // phase 1 block: uniform draws over I
    long long block = std::min(cfg.random_block, cfg.random_budget - v.stats.random_used);
    if (block > 0) {
      std::vector<Vec> draws(static_cast<std::size_t>(block));
      for (auto& d : draws) d = model.initial_box.sample(rng_random);

      long long found = -1;
      if (cfg.workers <= 1) {
        for (long long i = 0; i < block; ++i)
          if (detail::violates(cfg, model, policy, draws[static_cast<std::size_t>(i)])) {
            found = i;
            break;
          }
      } else {
        std::vector<std::future<long long>> futures;
        const long long chunk = (block + cfg.workers - 1) / cfg.workers;
        for (long long lo = 0; lo < block; lo += chunk) {
          const long long hi = std::min(block, lo + chunk);
          futures.push_back(std::async(std::launch::async, [&, lo, hi]() -> long long {
            for (long long i = lo; i < hi; ++i)
              if (detail::violates(cfg, model, policy, draws[static_cast<std::size_t>(i)]))
                return i;
            return -1;
          }));
        }
        for (auto& f : futures) {
          long long idx = f.get();
          if (idx >= 0 && (found < 0 || idx < found)) found = idx;
        }
      }
      if (found >= 0) {
        v.counterexample = true;
        v.x0 = draws[static_cast<std::size_t>(found)];
        v.draw_index = v.stats.random_used + found;
        v.stats.random_used += found + 1;
        detail::violates(cfg, model, policy, v.x0, &v.sim);
        return v;
      }
      v.stats.random_used += block;
    }

    // phase 2 block: projected BFGS ascent on the closed-loop cost
    long long ablock = std::min(cfg.adversarial_block,
                                cfg.adversarial_budget - v.stats.adversarial_used);
    for (long long it = 0; it < ablock; ++it) {
      ++v.stats.adversarial_used;
      if (cfg.on_adversarial_iterate) cfg.on_adversarial_iterate(ascent.x);
      if (std::isfinite(ascent.f)) v.stats.worst_objective = std::max(v.stats.worst_objective, ascent.f);

      if (detail::violates(cfg, model, policy, ascent.x, &v.sim)) {
        v.counterexample = true;
        v.x0 = ascent.x;
        return v;
      }
      if (!std::isfinite(ascent.f)) {
        // +inf objective but the trace reaches: numerical fluke; restart
        restart_ascent();
        continue;
      }

      Vec g = fd_gradient(ascent.x, ascent.f);
      if (g.cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + std::abs(ascent.f))) {
        restart_ascent();
        continue;
      }
      Vec dir = ascent.Hinv * g;  // ascent direction
      if (dir.dot(g) <= 0.0) {
        ascent.Hinv = Mat::Identity(n, n);
        dir = g;
      }
      const double scale = model.initial_box.half_width().maxCoeff();
      double step = ascent.fresh ? scale / std::max(1.0, dir.norm()) : 1.0;
      bool improved = false;
      Vec xn;
      double fn = 0.0;
      for (int ls = 0; ls < 12; ++ls) {
        xn = model.initial_box.clamp(ascent.x + step * dir);
        fn = objective(xn);
        if (std::isfinite(fn) && fn > ascent.f + 1e-12 * (1.0 + std::abs(ascent.f))) {
          improved = true;
          break;
        }
        if (!std::isfinite(fn)) {
          // re-simulate to confirm; +inf that reaches G is treated as no gain
          if (detail::violates(cfg, model, policy, xn, &v.sim)) {
            v.counterexample = true;
            v.x0 = xn;
            return v;
          }
        }
        step *= 0.5;
      }
      if (!improved) {
        restart_ascent();
        continue;
      }
      // damped BFGS update on the negated objective (descent convention)
      Vec s = xn - ascent.x;
      Vec ygrad = fd_gradient(xn, fn) - g;
      double sy = -s.dot(ygrad);  // negated objective curvature
      if (sy > 1e-12 * s.norm() * ygrad.norm()) {
        Vec yneg = -ygrad;
        Mat I = Mat::Identity(n, n);
        Mat V = I - (s * yneg.transpose()) / sy;
        ascent.Hinv = V * ascent.Hinv * V.transpose() + (s * s.transpose()) / sy;
      }
      ascent.x = xn;
      ascent.f = fn;
      ascent.fresh = false;
    }
  }
  return v;
}

/// Convenience overload: falsify a parametric policy, inputs clamped to the
/// plant's input box.
inline Verdict falsify(const FalsifierConfig& cfg, const MpcConfig& mpc_cfg,
                       const PlantModel& model, const PolicyParams& policy) {
  return falsify(cfg, mpc_cfg, model,
                 [&](const Vec& x) { return eval_policy(policy, x, model.input_box); });
}

}  // namespace polsyn
