#pragma once

#include <future>

#include "polsyn/falsifier.hpp"
#include "polsyn/mpc.hpp"

namespace polsyn {

/// One supervised training pair: a visited state and the demonstrator's
/// first optimal input at that state.
struct DatasetPair {
  Vec x;
  Vec u;
  bool degraded = false;  // inner solver did not certify convergence
};

struct BaselineDataset {
  std::vector<DatasetPair> pairs;  // concatenated in trace order
  int traces = 0;
  int traces_reached = 0;
};

/// Roll the receding-horizon demonstrator from M uniform draws over the
/// initial set, recording (state, first optimal input) at every MPC step.
/// Draws are pre-sampled from one substream so the dataset is identical for
/// any worker count.
inline BaselineDataset collect_dataset(const MpcConfig& mpc_cfg, const PlantModel& model, int M,
                                       std::uint64_t seed, int max_steps = 300, int workers = 1) {
  if (M < 1) throw std::invalid_argument("collect_dataset: M must be >= 1");
  if (max_steps < 1) throw std::invalid_argument("collect_dataset: max_steps must be >= 1");
  mpc_cfg.validate(model.state_dim, model.input_dim);

  std::vector<Vec> starts(M);
  auto rng = make_rng(seed, 0xba5eull);
  for (int i = 0; i < M; ++i) starts[i] = model.initial_box.sample(rng);

  std::vector<DemoTrace> traces(M);
  auto run_range = [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i)
      traces[i] = demonstrator_rollout(mpc_cfg, model, starts[i], max_steps);
  };
  const int nw = std::max(1, std::min(workers, M));
  if (nw == 1) {
    run_range(0, M);
  } else {
    std::vector<std::future<void>> futs;
    const int chunk = (M + nw - 1) / nw;
    for (int w = 0; w < nw; ++w)
      futs.push_back(std::async(std::launch::async, run_range, w * chunk,
                                std::min(M, (w + 1) * chunk)));
    for (auto& f : futs) f.get();
  }

  BaselineDataset out;
  out.traces = M;
  for (const DemoTrace& tr : traces) {
    if (tr.reached) ++out.traces_reached;
    for (const DemoTraceStep& step : tr.steps) out.pairs.push_back({step.x, step.u_star, step.degraded});
  }
  return out;
}

/// Fraction of dataset pairs whose input lies on the boundary of the input
/// box in at least one coordinate. The demonstrator saturates its inputs on
/// aggressive starts, so many distinct states share exactly the same
/// demonstration — the clustering that defeats plain regression.
inline double saturation_fraction(const BaselineDataset& data, const Box& input_box,
                                  double tol = 1e-9) {
  if (data.pairs.empty()) return 0.0;
  int hits = 0;
  for (const DatasetPair& p : data.pairs) {
    bool at_bound = false;
    for (int i = 0; i < p.u.size() && !at_bound; ++i)
      at_bound = std::abs(p.u[i] - input_box.lo[i]) <= tol || std::abs(p.u[i] - input_box.hi[i]) <= tol;
    if (at_bound) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.pairs.size());
}

struct FitResult {
  PolicyParams policy;
  double residual_rms = 0.0;   // rms of (pi_theta(x) - u) over all pairs and channels
  bool rank_deficient = false;
  bool clamped = false;        // minimum-norm solution fell outside the parameter box
};

/// Minimum-norm least-squares fit min_theta sum ||Phi(x_i) theta - u_i||^2,
/// solved channel by channel (the basis is block diagonal across input
/// channels) with a rank-revealing factorization, then clamped to the
/// initial parameter box [-delta, delta]^K.
inline FitResult fit_least_squares(const BasisSet& basis, const BaselineDataset& data,
                                   double delta) {
  if (data.pairs.empty()) throw std::invalid_argument("fit_least_squares: empty dataset");
  if (!(delta > 0.0)) throw std::invalid_argument("fit_least_squares: delta must be positive");
  const int rows = static_cast<int>(data.pairs.size());
  const int pc = basis.per_channel();
  const int channels = basis.num_channels;

  Mat design(rows, pc);
  for (int i = 0; i < rows; ++i) design.row(i) = basis.eval_monomials(data.pairs[i].x).transpose();

  FitResult out;
  Vec theta(basis.param_count());
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(design);
  out.rank_deficient = cod.rank() < pc;
  for (int c = 0; c < channels; ++c) {
    Vec target(rows);
    for (int i = 0; i < rows; ++i) target[i] = data.pairs[i].u[c];
    theta.segment(c * pc, pc) = cod.solve(target);
  }
  for (int k = 0; k < theta.size(); ++k) {
    if (std::abs(theta[k]) > delta) {
      theta[k] = std::clamp(theta[k], -delta, delta);
      out.clamped = true;
    }
  }
  out.policy = PolicyParams(basis, theta);

  double sq = 0.0;
  for (const DatasetPair& p : data.pairs) sq += (eval_policy_raw(out.policy, p.x) - p.u).squaredNorm();
  out.residual_rms = std::sqrt(sq / (static_cast<double>(rows) * channels));
  return out;
}

/// Regression-baseline summary for one trace-count setting.
struct BaselineReport {
  int traces = 0;
  int pairs = 0;
  double saturation = 0.0;
  double residual_rms = 0.0;
  bool rank_deficient = false;
  bool counterexample = false;  // falsifier verdict on the fitted policy
  Vec counterexample_x0;
  FalsifierStats falsifier_stats;
  PolicyParams policy;
};

/// Full baseline pipeline: collect M demonstrator traces, fit the policy by
/// least squares, and falsify the fit.
inline BaselineReport run_baseline(const MpcConfig& mpc_cfg, const PlantModel& model,
                                   const BasisSet& basis, int M, double delta,
                                   const FalsifierConfig& fcfg_in, std::uint64_t seed,
                                   int max_steps = 300, int workers = 1) {
  BaselineDataset data = collect_dataset(mpc_cfg, model, M, seed, max_steps, workers);
  FitResult fit = fit_least_squares(basis, data, delta);

  FalsifierConfig fcfg = fcfg_in;
  fcfg.seed = mix_seed(seed, 0xba5full);
  fcfg.workers = workers;
  Verdict v = falsify(fcfg, mpc_cfg, model, fit.policy);

  BaselineReport rep;
  rep.traces = M;
  rep.pairs = static_cast<int>(data.pairs.size());
  rep.saturation = saturation_fraction(data, model.input_box);
  rep.residual_rms = fit.residual_rms;
  rep.rank_deficient = fit.rank_deficient;
  rep.counterexample = v.counterexample;
  if (v.counterexample) rep.counterexample_x0 = v.x0;
  rep.falsifier_stats = v.stats;
  rep.policy = fit.policy;
  return rep;
}

}  // namespace polsyn
