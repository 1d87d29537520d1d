#pragma once

#include <cmath>

#include "polsyn/basis.hpp"
#include "polsyn/polytope.hpp"
#include "polsyn/solvers.hpp"

namespace polsyn {

/// Ordered sample set O_i = {(x_j, U_j)}: states paired with the feasible
/// input polytopes the learned policy must respect. Duplicate states indicate
/// a framework bug upstream and are rejected.
struct SampleSet {
  struct Entry {
    Vec x;
    ControlPolytope polytope;
  };
  std::vector<Entry> entries;

  void add(const Vec& x, ControlPolytope polytope, double duplicate_tol = 0.0) {
    if (!all_finite(x)) throw std::invalid_argument("SampleSet::add: non-finite state");
    for (const Entry& e : entries)
      if (e.x.size() == x.size() && (e.x - x).cwiseAbs().maxCoeff() <= duplicate_tol)
        throw std::invalid_argument("SampleSet::add: duplicate sample state");
    entries.push_back({x, std::move(polytope)});
  }

  int size() const { return static_cast<int>(entries.size()); }
};

/// Parameter polyhedron Theta_i = {theta | C theta <= d}, always containing
/// the 2K box rows for Theta_0 = [-Delta, Delta]^K plus one row block per
/// sample, obtained by substituting the policy's linear form into the
/// sample's polytope: A (Phi(x) theta) <= b.
struct ParamPolyhedron {
  Mat C;
  Vec d;
  double delta = 0.0;  // half-width of the initial box
  int param_count = 0;

  ParamPolyhedron() = default;
  ParamPolyhedron(int K, double Delta) : delta(Delta), param_count(K) {
    if (K < 1) throw std::invalid_argument("ParamPolyhedron: need at least one parameter");
    if (!(Delta > 0.0)) throw std::invalid_argument("ParamPolyhedron: Delta must be positive");
    C.resize(2 * K, K);
    d.resize(2 * K);
    C.topRows(K) = Mat::Identity(K, K);
    d.head(K).setConstant(Delta);
    C.bottomRows(K) = -Mat::Identity(K, K);
    d.tail(K).setConstant(Delta);
  }

  int rows() const { return static_cast<int>(C.rows()); }
};

/// Appends the rows (A Phi(x)) theta <= b for one sample. Emptiness is not
/// checked here; mve() detects it.
inline ParamPolyhedron add_sample(const ParamPolyhedron& poly, const BasisSet& basis, const Vec& x,
                                  const ControlPolytope& U) {
  Mat phi = eval_basis(basis, x);
  if (phi.cols() != poly.param_count)
    throw std::invalid_argument("add_sample: basis parameter count mismatch");
  if (U.A.cols() != phi.rows())
    throw std::invalid_argument("add_sample: polytope input dimension mismatch");

  Mat rows = U.A * phi;
  if (!rows.allFinite()) throw std::invalid_argument("add_sample: non-finite constraint rows");

  ParamPolyhedron grown = poly;
  const int old = poly.rows();
  grown.C.conservativeResize(old + rows.rows(), poly.param_count);
  grown.d.conservativeResize(old + rows.rows());
  grown.C.bottomRows(rows.rows()) = rows;
  grown.d.tail(rows.rows()) = U.b;
  return grown;
}

enum class LearnerVerdict { Center, TooThin, Infeasible };

struct LearnerResult {
  LearnerVerdict verdict = LearnerVerdict::Infeasible;
  Ellipsoid ellipsoid;       // valid for Center and TooThin
  double min_axis = 0.0;     // min singular value of B (maximal inscribed ball radius)
};

/// Maximum-volume inscribed ellipsoid of the parameter polyhedron. Returns
/// Center with the MVE, TooThin when the largest inscribed ball has radius
/// below delta_ball (candidate space exhausted), or Infeasible when the
/// polyhedron has no interior point.
inline LearnerResult mve(const ParamPolyhedron& poly, double delta_ball) {
  if (!(delta_ball > 0.0)) throw std::invalid_argument("mve: delta_ball must be positive");
  MveStatus r = inscribed_ellipsoid(poly.C, poly.d);
  LearnerResult out;
  if (r.kind == MveStatus::Kind::Infeasible) {
    out.verdict = LearnerVerdict::Infeasible;
    return out;
  }
  if (r.kind == MveStatus::Kind::SolverFailure)
    throw std::runtime_error("mve: inscribed-ellipsoid solver failed on a feasible polyhedron");
  out.ellipsoid = r.ellipsoid;
  out.min_axis = r.ellipsoid.min_semi_axis();
  // The MVE's smallest semi-axis is the radius of the largest inscribed ball
  // up to solver accuracy; confirm borderline verdicts against the exact
  // Chebyshev radius (max-min-slack over unit-normalized rows).
  if (out.min_axis < delta_ball) {
    Mat Cn = poly.C;
    Vec dn = poly.d;
    for (int i = 0; i < Cn.rows(); ++i) {
      double nrm = Cn.row(i).norm();
      if (nrm > 0.0) {
        Cn.row(i) /= nrm;
        dn[i] /= nrm;
      }
    }
    double cheb = max_min_slack(Cn, dn).slack;
    out.verdict = cheb < delta_ball ? LearnerVerdict::TooThin : LearnerVerdict::Center;
  } else {
    out.verdict = LearnerVerdict::Center;
  }
  return out;
}

/// Termination bound of the ellipsoid-style argument: volume shrinks by at
/// least (1 - 1/K) per cut through the MVE center, so at most
/// ceil(K (ln Delta - ln delta_ball) / (-ln(1 - 1/K))) iterations fit between
/// the initial box and a delta_ball-thin set.
inline int iteration_bound(int K, double Delta, double delta_ball) {
  if (K < 2) throw std::invalid_argument("iteration_bound: K must be >= 2");
  if (!(Delta >= delta_ball && delta_ball > 0.0))
    throw std::invalid_argument("iteration_bound: need Delta >= delta_ball > 0");
  double num = static_cast<double>(K) * (std::log(Delta) - std::log(delta_ball));
  double den = -std::log1p(-1.0 / static_cast<double>(K));
  return static_cast<int>(std::ceil(num / den));
}

}  // namespace polsyn
