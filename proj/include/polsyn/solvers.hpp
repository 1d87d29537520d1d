#pragma once

#include <cmath>
#include <limits>

#include "polsyn/common.hpp"

namespace polsyn {

struct MinSlackResult {
  Vec x;
  double slack = -std::numeric_limits<double>::infinity();
};

/// Maximize the minimum slack min_i (b_i - a_i.x)/||a_i|| over x, i.e. find
/// the (approximate) Chebyshev center of {x | Ax <= b}. Solved by Newton on
/// a log-sum-exp smoothing of the max residual with a decreasing smoothing
/// scale; the returned slack is the exact min slack at the final iterate.
/// For a bounded polyhedron with nonempty interior the result is strictly
/// interior; a non-positive slack certifies that no interior point was found.
inline MinSlackResult max_min_slack(const Mat& A_in, const Vec& b_in, const Vec& x0 = Vec()) {
  const int m = static_cast<int>(A_in.rows());
  const int n = static_cast<int>(A_in.cols());
  Mat A(m, n);
  Vec b(m);
  for (int i = 0; i < m; ++i) {
    double nrm = A_in.row(i).norm();
    if (nrm < 1e-300) {
      // 0.x <= b row: vacuous if b >= 0, globally infeasible otherwise
      if (b_in[i] < 0.0) return {Vec::Zero(n), -std::numeric_limits<double>::infinity()};
      A.row(i).setZero();
      b[i] = std::abs(b_in[i]) + 1.0;
      continue;
    }
    A.row(i) = A_in.row(i) / nrm;
    b[i] = b_in[i] / nrm;
  }

  Vec x = (x0.size() == n) ? x0 : Vec::Zero(n);
  auto exact_slack = [&](const Vec& xx) { return (b - A * xx).minCoeff(); };

  Vec r = A * x - b;  // negative slack
  double sigma = std::max(1.0, r.cwiseAbs().maxCoeff());
  const double sigma_min = 1e-10;
  while (sigma > sigma_min) {
    for (int it = 0; it < 60; ++it) {
      r = A * x - b;
      const double rmax = r.maxCoeff();
      Vec p = ((r.array() - rmax) / sigma).exp().matrix();
      p /= p.sum();
      Vec g = A.transpose() * p;
      Mat H = (A.transpose() * p.asDiagonal() * A - g * g.transpose()) / sigma;
      H.diagonal().array() += 1e-13 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
      Vec dx = -H.ldlt().solve(g);
      if (!all_finite(dx)) break;
      // backtracking on the smoothed objective
      auto fval = [&](const Vec& xx) {
        Vec rr = A * xx - b;
        double mx = rr.maxCoeff();
        return mx + sigma * std::log(((rr.array() - mx) / sigma).exp().sum());
      };
      double f0 = fval(x);
      double step = 1.0;
      Vec xn = x + dx;
      int ls = 0;
      while (ls < 40 && (!all_finite(xn) || fval(xn) > f0 - 1e-12 * std::abs(f0))) {
        step *= 0.5;
        xn = x + step * dx;
        ++ls;
      }
      if (ls >= 40) break;
      double moved = (xn - x).norm();
      x = xn;
      if (x.norm() > 1e9) return {x, exact_slack(x)};  // unbounded direction
      if (moved < 1e-14 * (1.0 + x.norm())) break;
    }
    sigma *= 0.2;
  }
  return {x, exact_slack(x)};
}

/// Ellipsoid {center + B s : ||s|| <= 1} with B lower triangular, positive
/// diagonal.
struct Ellipsoid {
  Vec center;
  Mat B;

  double min_semi_axis() const {
    Eigen::JacobiSVD<Mat> svd(B);
    return svd.singularValues().minCoeff();
  }
  double log_volume_factor() const {  // log det B (log volume up to the unit-ball constant)
    double s = 0.0;
    for (int i = 0; i < B.rows(); ++i) s += std::log(B(i, i));
    return s;
  }
  /// b - a.x - ||B^t a||, the containment slack against a row a.x <= b.
  double containment_slack(const Vec& a, double b) const {
    return b - a.dot(center) - (B.transpose() * a).norm();
  }
};

struct MveSolveResult {
  bool converged = false;
  Vec center;
  Mat shape;  // E2 = B B^t
};

/// Maximum-volume inscribed ellipsoid of {v | Av <= b} by a primal-dual
/// interior-point iteration on the log-det formulation. x0 must be strictly
/// interior. Returns the center and the ellipsoid matrix E2.
inline MveSolveResult mve_solve(const Mat& A_in, const Vec& b_in, const Vec& x0,
                                int maxiter = 200, double tol = 1e-8) {
  const int m = static_cast<int>(A_in.rows());
  const int n = static_cast<int>(A_in.cols());
  MveSolveResult out;

  const double bnrm = b_in.norm();
  Vec bmAx0 = b_in - A_in * x0;
  if (bmAx0.minCoeff() <= 0.0) throw std::invalid_argument("mve_solve: x0 not strictly interior");

  // shift to x0 and scale every row to unit slack
  Mat A = bmAx0.cwiseInverse().asDiagonal() * A_in;
  const double minmu = 1e-10;
  const double tau0 = 0.75;

  Vec x = Vec::Zero(n);
  Vec y = Vec::Ones(m);
  Vec bmAx = Vec::Ones(m);
  Vec z, h, Adx;
  Mat E2;
  double astep = 0.0;
  double res = 1.0;

  for (int iter = 0; iter < maxiter; ++iter) {
    if (iter > 0) bmAx -= astep * Adx;

    Mat AtYA = A.transpose() * y.asDiagonal() * A;
    E2 = AtYA.inverse();
    Mat Q = A * E2 * A.transpose();
    h = Q.diagonal().cwiseMax(0.0).cwiseSqrt();

    if (iter == 0) {
      double t = (bmAx.cwiseQuotient(h)).minCoeff();
      y /= (t * t);
      h *= t;
      Q *= (t * t);
      z = (bmAx - h).cwiseMax(1e-1);
    }

    Vec yz = y.cwiseProduct(z);
    Vec yh = y.cwiseProduct(h);
    double gap = yz.sum() / m;
    double rmu = std::max(std::min(0.5, gap) * gap, minmu);

    Vec R1 = -A.transpose() * yh;
    Vec R2 = bmAx - h - z;
    Vec R3 = Vec::Constant(m, rmu) - yz;
    res = std::max({R1.cwiseAbs().maxCoeff(), R2.cwiseAbs().maxCoeff(), R3.cwiseAbs().maxCoeff()});

    if (res < tol * (1.0 + bnrm) && rmu <= minmu * 1.0000001) {
      out.converged = true;
      break;
    }

    Vec y2h = 2.0 * yh;
    Mat YQ = y.asDiagonal() * Q;
    Mat G = YQ.cwiseProduct(YQ.transpose());
    G.diagonal() += y2h.cwiseProduct(z).cwiseMax(1e-12);

    Eigen::LDLT<Mat> Gfac(G);
    Mat YA = y.asDiagonal() * A;
    Mat T = Gfac.solve((h + z).asDiagonal() * YA);
    Mat ATP = (y2h.asDiagonal() * T - YA).transpose();

    Vec R3Dy = R3.cwiseQuotient(y);
    Vec R23 = R2 - R3Dy;
    Mat ATP_A = ATP * A;
    Vec dx = ATP_A.fullPivLu().solve(R1 + ATP * R23);
    Adx = A * dx;

    Vec dyDy = Gfac.solve(y2h.cwiseProduct(Adx - R23));
    Vec dy = y.cwiseProduct(dyDy);
    Vec dz = R3Dy - z.cwiseProduct(dyDy);

    auto neg_step = [](const Vec& ratios) {
      double mn = -0.5;
      for (int i = 0; i < ratios.size(); ++i) mn = std::min(mn, ratios[i]);
      return -1.0 / mn;
    };
    double ax = neg_step((-Adx.array() / bmAx.array()).matrix());
    double ay = neg_step(dyDy);
    double az = neg_step(dz.cwiseQuotient(z));
    double tau = std::max(tau0, 1.0 - res);
    astep = tau * std::min({1.0, ax, ay, az});
    if (!std::isfinite(astep) || astep <= 0.0) break;

    x += astep * dx;
    y += astep * dy;
    z += astep * dz;
  }

  out.center = x0 + x;
  out.shape = 0.5 * (E2 + E2.transpose());
  return out;
}

/// MVE with rows normalized, interiority certified, and the returned
/// ellipsoid shrunk (if needed, by a factor ~1) so that containment holds to
/// machine precision.
struct MveStatus {
  enum class Kind { Ok, Infeasible, SolverFailure };
  Kind kind = Kind::Ok;
  Ellipsoid ellipsoid;
  double interior_slack = 0.0;  // Chebyshev-like radius found during phase 1
};

inline MveStatus inscribed_ellipsoid(const Mat& A_in, const Vec& b_in,
                                     double interior_tol = 1e-9) {
  MveStatus st;
  const int m = static_cast<int>(A_in.rows());
  const int n = static_cast<int>(A_in.cols());
  Mat A(m, n);
  Vec b(m);
  for (int i = 0; i < m; ++i) {
    double nrm = A_in.row(i).norm();
    if (nrm < 1e-300) throw std::invalid_argument("inscribed_ellipsoid: zero row");
    A.row(i) = A_in.row(i) / nrm;
    b[i] = b_in[i] / nrm;
  }

  MinSlackResult ip = max_min_slack(A, b);
  st.interior_slack = ip.slack;
  if (!(ip.slack > interior_tol)) {
    st.kind = MveStatus::Kind::Infeasible;
    return st;
  }

  // the ball of radius ip.slack at the interior point is always inscribed;
  // use it as a last resort so a hard ellipsoid solve degrades the cut
  // quality, not the whole run
  auto chebyshev_ball = [&]() {
    st.kind = MveStatus::Kind::Ok;
    st.ellipsoid = Ellipsoid{ip.x, ip.slack * Mat::Identity(n, n)};
    return st;
  };

  // thin polyhedra need many more interior-point iterations; fall back to a
  // looser tolerance before giving up
  MveSolveResult sol = mve_solve(A, b, ip.x);
  if (!sol.converged) sol = mve_solve(A, b, ip.x, 1000, 1e-8);
  if (!sol.converged) sol = mve_solve(A, b, ip.x, 1000, 1e-6);
  if (!sol.converged) return chebyshev_ball();

  Eigen::LLT<Mat> llt(sol.shape);
  if (llt.info() != Eigen::Success) return chebyshev_ball();
  Ellipsoid e{sol.center, Mat(llt.matrixL())};

  // enforce containment exactly: scale by the worst constraint ratio
  double shrink = 1.0;
  for (int i = 0; i < m; ++i) {
    double gap = b[i] - A.row(i).dot(e.center);
    double reach = (e.B.transpose() * A.row(i).transpose()).norm();
    if (reach > 0.0 && gap < reach) shrink = std::min(shrink, std::max(0.0, gap / reach));
  }
  if (shrink < 1.0) e.B *= shrink;
  st.ellipsoid = std::move(e);
  return st;
}

}  // namespace polsyn
