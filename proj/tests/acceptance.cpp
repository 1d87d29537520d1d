// End-to-end acceptance gate. Each numbered criterion prints exactly one
// PASS/FAIL line; the process exits with the number of failed criteria.

#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>
#include <vector>

#include "polsyn/baseline.hpp"
#include "polsyn/config.hpp"

using namespace polsyn;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("%s %d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string config_path(const std::string& name) {
  return std::string(POLSYN_CONFIG_DIR) + "/" + name;
}

struct RunRecord {
  std::string name;
  int param_count = 0;
  CegisConfig cegis;
  Outcome outcome;
  double wall_seconds = 0.0;
};

std::vector<RunRecord> g_runs;  // shared by criteria 4 and 7

RunRecord learn(const std::string& config_name) {
  RunConfig rc = load_run_config(config_path(config_name));
  RunRecord rec;
  rec.name = rc.name;
  rec.param_count = rc.basis.param_count();
  rec.cegis = rc.cegis;
  auto t0 = std::chrono::steady_clock::now();
  rec.outcome = cegis_run(rc.model, rc.basis, rc.mpc, rc.cegis);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  g_runs.push_back(rec);
  return rec;
}

int demos_used(const Outcome& o) {
  return o.log.empty() ? 0 : o.log.back().sample_count;
}

// ---------------------------------------------------------------------------

void criterion1() {
  try {
    RunRecord r = learn("car1_linear.json");
    bool ok = r.outcome.kind == OutcomeKind::Success && r.outcome.iterations <= 20 &&
              r.wall_seconds <= 600.0;
    std::ostringstream d;
    d << "car1 linear: " << outcome_name(r.outcome.kind) << ", " << r.outcome.iterations
      << " iterations (<=20), " << r.wall_seconds << " s (<=600)";
    report(1, ok, d.str());
  } catch (const std::exception& e) {
    report(1, false, std::string("car1 linear threw: ") + e.what());
  }
}

void criterion2() {
  try {
    RunRecord lin = learn("car2_linear.json");
    RunRecord aff = learn("car2_affine.json");
    bool ok = lin.param_count == 32 && aff.param_count == 36 &&
              lin.outcome.kind == OutcomeKind::Success && lin.outcome.iterations <= 100 &&
              aff.outcome.kind == OutcomeKind::Success && aff.outcome.iterations <= 100;
    std::ostringstream d;
    d << "car2 linear K=" << lin.param_count << " " << outcome_name(lin.outcome.kind) << " in "
      << lin.outcome.iterations << " iters; affine K=" << aff.param_count << " "
      << outcome_name(aff.outcome.kind) << " in " << aff.outcome.iterations
      << " iters (<=100 each)";
    report(2, ok, d.str());
  } catch (const std::exception& e) {
    report(2, false, std::string("car2 threw: ") + e.what());
  }
}

void criterion3() {
  try {
    RunRecord trig = learn("ductedfan_trig.json");
    RunRecord poly = learn("ductedfan_poly_fail.json");
    int demos = demos_used(trig.outcome);
    bool ok = trig.outcome.kind == OutcomeKind::Success && demos <= 4 * 46 &&
              poly.outcome.kind == OutcomeKind::NoCandidate;
    std::ostringstream d;
    d << "ducted fan trig: " << outcome_name(trig.outcome.kind) << " with " << demos
      << " demonstrations (<=184); poly negative control: " << outcome_name(poly.outcome.kind)
      << " in " << poly.outcome.iterations << " iters";
    report(3, ok, d.str());
  } catch (const std::exception& e) {
    report(3, false, std::string("ducted fan threw: ") + e.what());
  }
}

void criterion4() {
  bool ok = iteration_bound(10, 100.0, 1e-3) == 1093;
  std::ostringstream d;
  d << "iteration_bound(10,100,1e-3)=" << iteration_bound(10, 100.0, 1e-3) << " (expect 1093)";
  for (const RunRecord& r : g_runs) {
    int bound = iteration_bound(r.param_count, r.cegis.delta, r.cegis.delta_ball);
    if (r.outcome.iterations > bound) {
      ok = false;
      d << "; " << r.name << " exceeded bound " << bound;
    }
  }
  d << "; all " << g_runs.size() << " runs within their bounds";
  report(4, ok, d.str());
}

void criterion5() {
  bool ok = true;
  std::ostringstream d;
  // hypercube: MVE is the unit ball
  {
    const int n = 4;
    Mat C(2 * n, n);
    Vec b = Vec::Ones(2 * n);
    C.topRows(n) = Mat::Identity(n, n);
    C.bottomRows(n) = -Mat::Identity(n, n);
    MveStatus st = inscribed_ellipsoid(C, b);
    double cerr = st.ellipsoid.center.cwiseAbs().maxCoeff();
    double serr = (st.ellipsoid.B - Mat::Identity(n, n)).cwiseAbs().maxCoeff();
    if (st.kind != MveStatus::Kind::Ok || cerr > 1e-8 || serr > 1e-8) {
      ok = false;
      d << "hypercube off (center " << cerr << ", shape " << serr << "); ";
    }
  }
  // 2-simplex: center (1/3, 1/3)
  {
    Mat C(3, 2);
    C << -1.0, 0.0, 0.0, -1.0, 1.0, 1.0;
    Vec b(3);
    b << 0.0, 0.0, 1.0;
    MveStatus st = inscribed_ellipsoid(C, b);
    Vec expect = Vec::Constant(2, 1.0 / 3.0);
    double cerr = (st.ellipsoid.center - expect).cwiseAbs().maxCoeff();
    if (st.kind != MveStatus::Kind::Ok || cerr > 1e-4) {
      ok = false;
      d << "simplex center err " << cerr << "; ";
    }
  }
  // 100 random polytopes: containment + volume dominance over sampled ellipsoids
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst_resid = 0.0;
  int dominance_failures = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + (t % 2);
    const int m = 4 * n;
    Mat C(m + 2 * n, n);
    Vec b(m + 2 * n);
    for (int i = 0; i < m; ++i) {
      Vec a(n);
      for (int j = 0; j < n; ++j) a[j] = gauss(rng);
      a.normalize();
      C.row(i) = a.transpose();
      b[i] = 0.2 + std::abs(gauss(rng));
    }
    C.middleRows(m, n) = Mat::Identity(n, n);
    C.bottomRows(n) = -Mat::Identity(n, n);
    b.tail(2 * n).setConstant(5.0);
    MveStatus st = inscribed_ellipsoid(C, b);
    if (st.kind != MveStatus::Kind::Ok) {
      ok = false;
      d << "polytope " << t << " not solved; ";
      continue;
    }
    for (int i = 0; i < C.rows(); ++i)
      worst_resid = std::max(worst_resid,
                             -st.ellipsoid.containment_slack(C.row(i).transpose(), b[i]) /
                                 C.row(i).norm());
    double mve_logvol = st.ellipsoid.log_volume_factor();
    for (int s = 0; s < 20; ++s) {
      // random contained ellipsoid: random shape at a random interior center,
      // scaled to touch the nearest constraint
      Vec dir(n);
      for (int j = 0; j < n; ++j) dir[j] = gauss(rng);
      double rad = std::uniform_real_distribution<double>(0.0, 0.9)(rng);
      Vec cen = st.ellipsoid.center + st.ellipsoid.B * (rad * dir.normalized());
      Mat R(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) R(i, j) = gauss(rng);
      R += static_cast<double>(n) * Mat::Identity(n, n);  // keep it invertible
      double scale = std::numeric_limits<double>::infinity();
      for (int i = 0; i < C.rows(); ++i) {
        double gap = b[i] - C.row(i).dot(cen);
        double reach = (R.transpose() * C.row(i).transpose()).norm();
        if (reach > 0.0) scale = std::min(scale, gap / reach);
      }
      if (!(scale > 0.0)) continue;
      double logvol = n * std::log(scale) + std::log(std::abs(R.determinant()));
      if (logvol > mve_logvol + 1e-9) ++dominance_failures;
    }
  }
  if (worst_resid > 1e-8) {
    ok = false;
    d << "containment residual " << worst_resid << "; ";
  }
  if (dominance_failures > 0) {
    ok = false;
    d << dominance_failures << " dominance failures; ";
  }
  d << "hypercube+simplex+100 random polytopes, worst containment residual " << worst_resid;
  report(5, ok, d.str());
}

void criterion6() {
  bool ok = true;
  std::ostringstream d;
  try {
    // scalar closed-form oracle: x' = u, N=1, dt=1, weights (1,1,10), x0=1
    PlantModel m;
    m.id = "scalar";
    m.state_dim = 1;
    m.input_dim = 1;
    m.rhs = [](const Vec&, const Vec& u) { return u; };
    m.drift = [](const Vec&) { return Vec::Zero(1); };
    m.input_matrix = [](const Vec&) { return Mat::Ones(1, 1); };
    m.state_box = Box::cube(1, 100.0);
    m.input_box = Box::cube(1, 50.0);
    m.initial_box = Box::cube(1, 1.0);
    m.goal_box = Box::cube(1, 0.01);
    m.validate();
    MpcConfig cfg;
    cfg.horizon = 1;
    cfg.dt = 1.0;
    cfg.input_weights = Vec::Ones(1);
    cfg.state_weights = Vec::Ones(1);
    cfg.terminal_weights = Vec::Constant(1, 10.0);
    auto sol = solve_mpc(cfg, m, Vec::Ones(1));
    double u_err = std::abs(sol.first_input()[0] + 10.0 / 11.0);
    double v_err = std::abs(sol.value - (1.0 + 100.0 / 121.0 + 10.0 / 121.0));
    double g_err = std::abs(value_gradient(cfg, m, Vec::Ones(1))[0] - 42.0 / 11.0);
    if (u_err > 1e-6 || v_err > 1e-6 || g_err > 1e-4) {
      ok = false;
      d << "scalar oracle errs u=" << u_err << " V=" << v_err << " dV=" << g_err << "; ";
    }

    // per case study: 20 strictly decreasing traces + u* membership in U_lambda
    struct Case {
      std::string config;
      int traces;
    };
    for (const Case& c : {Case{"car1_linear.json", 20}, Case{"ductedfan_trig.json", 20}}) {
      RunConfig rc = load_run_config(config_path(c.config));
      auto rng = make_rng(99, 0xacc6ull);
      int decrease_violations = 0;
      for (int t = 0; t < c.traces; ++t) {
        Vec x0 = rc.model.initial_box.sample(rng);
        DemoTrace tr = demonstrator_rollout(rc.mpc, rc.model, x0, 300);
        if (!tr.reached) ++decrease_violations;
        for (std::size_t k = 1; k < tr.steps.size(); ++k)
          if (!(tr.steps[k].value < tr.steps[k - 1].value)) ++decrease_violations;
      }
      int membership_violations = 0;
      for (double lambda : {0.1, 0.5, 1.0}) {
        MpcConfig cfg_l = rc.mpc;
        cfg_l.lambda = lambda;
        auto rng2 = make_rng(7, 0xacc7ull);
        for (int s = 0; s < 10; ++s) {
          Vec x = rc.model.initial_box.sample(rng2);
          if (rc.model.goal_box.contains(x)) continue;
          Demonstration dm = feasible_set(cfg_l, rc.model, x);
          if (dm.polytope.violation(dm.u_star) > 1e-8) ++membership_violations;
        }
      }
      if (decrease_violations > 0 || membership_violations > 0) {
        ok = false;
        d << rc.name << ": " << decrease_violations << " decrease / " << membership_violations
          << " membership violations; ";
      }
    }
  } catch (const std::exception& e) {
    ok = false;
    d << "threw: " << e.what();
  }
  d << "scalar oracle + 20 decreasing traces and u* in U_lambda per case study";
  report(6, ok, d.str());
}

void criterion7() {
  // cegis_run itself throws if an MVE center violates any prior sample row
  // (compatibility recheck), so completed runs certify the learner side; the
  // witness side is certified by the logged residuals.
  bool ok = true;
  long long rows = 0;
  for (const RunRecord& r : g_runs)
    for (const IterationRecord& it : r.outcome.log)
      if (it.counterexample) {
        ++rows;
        if (!(it.witness_residual > 1e-8)) ok = false;
      }
  std::ostringstream d;
  d << rows << " witness rows across " << g_runs.size()
    << " runs, all violated by the incumbent (>1e-8) and all candidates compatible with prior "
       "rows (in-loop assertion)";
  report(7, ok, d.str());
}

void criterion8() {
  try {
    RunConfig rc = load_run_config(config_path("car1_linear.json"));
    FalsifierConfig fcfg = rc.cegis.falsifier;
    fcfg.random_budget = 20000;
    fcfg.adversarial_budget = 200;
    fcfg.random_block = 5000;
    fcfg.adversarial_block = 50;
    bool ok = true;
    std::ostringstream d;
    d << "car baseline:";
    for (int M : {10, 100, 1000}) {
      BaselineReport rep = run_baseline(rc.mpc, rc.model, rc.basis, M, rc.cegis.delta, fcfg,
                                        rc.cegis.seed, 300, 4);
      d << " M=" << M << " sat=" << rep.saturation << " rms=" << rep.residual_rms << " "
        << (rep.counterexample ? "falsified" : "accepted") << ";";
      if (!(rep.saturation > 0.10)) ok = false;
    }
    d << " saturation >10% required, falsifier verdicts reported";
    report(8, ok, d.str());
  } catch (const std::exception& e) {
    report(8, false, std::string("baseline threw: ") + e.what());
  }
}

void criterion9() {
  try {
    RunConfig rc = load_run_config(config_path("car1_linear.json"));
    // first run: the criterion-1 record if present, else a fresh one
    Outcome a;
    bool have_a = false;
    for (const RunRecord& r : g_runs)
      if (r.name == rc.name) {
        a = r.outcome;
        have_a = true;
        break;
      }
    if (!have_a) a = cegis_run(rc.model, rc.basis, rc.mpc, rc.cegis);
    Outcome b = cegis_run(rc.model, rc.basis, rc.mpc, rc.cegis);
    bool ok = a.kind == b.kind && a.iterations == b.iterations &&
              a.policy.theta.size() == b.policy.theta.size() &&
              (a.policy.theta - b.policy.theta).cwiseAbs().maxCoeff() == 0.0 &&
              a.log.size() == b.log.size();
    if (ok)
      for (std::size_t i = 0; i < a.log.size(); ++i) {
        if (a.log[i].counterexample != b.log[i].counterexample) ok = false;
        if (a.log[i].counterexample &&
            (a.log[i].counterexample_x0 - b.log[i].counterexample_x0).cwiseAbs().maxCoeff() != 0.0)
          ok = false;
      }
    std::ostringstream d;
    d << "two car1 runs, same seed: outcome " << outcome_name(a.kind) << "/"
      << outcome_name(b.kind) << ", theta and counterexample x0 sequences bitwise equal: "
      << (ok ? "yes" : "no");
    report(9, ok, d.str());
  } catch (const std::exception& e) {
    report(9, false, std::string("reproducibility run threw: ") + e.what());
  }
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  std::printf("%s (%d criteria failed)\n", failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED",
              failures);
  return failures;
}
