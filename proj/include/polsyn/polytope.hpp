#pragma once

#include "polsyn/common.hpp"
#include "polsyn/solvers.hpp"

namespace polsyn {

/// Input polytope {u | A u <= b}. Construction certifies non-emptiness by
/// locating a max-slack point; a polytope that admits no such point is
/// rejected.
struct ControlPolytope {
  Mat A;
  Vec b;
  Vec witness_point;   // max-min-slack point found at construction
  double slack = 0.0;  // its min slack (>= -tol; 0 for degenerate but nonempty sets)

  ControlPolytope() = default;
  ControlPolytope(Mat A_in, Vec b_in, double empty_tol = 1e-9)
      : A(std::move(A_in)), b(std::move(b_in)) {
    if (A.rows() != b.size()) throw std::invalid_argument("ControlPolytope: A/b row mismatch");
    MinSlackResult r = max_min_slack(A, b);
    if (!(r.slack > -empty_tol))
      throw std::invalid_argument("ControlPolytope: empty polytope (max slack " +
                                  std::to_string(r.slack) + ")");
    witness_point = r.x;
    slack = r.slack;
  }

  int input_dim() const { return static_cast<int>(A.cols()); }

  bool contains(const Vec& u, double tol = 0.0) const {
    return ((A * u - b).array() <= tol).all();
  }

  /// Largest constraint residual max_i (a_i.u - b_i); positive iff outside.
  double violation(const Vec& u) const { return (A * u - b).maxCoeff(); }

  /// Half-space a.u <= c intersected with the input box.
  static ControlPolytope half_space_with_box(const Vec& a, double c, const Box& box) {
    const int m = static_cast<int>(a.size());
    Mat A(1 + 2 * m, m);
    Vec b(1 + 2 * m);
    A.row(0) = a.transpose();
    b[0] = c;
    A.block(1, 0, m, m) = Mat::Identity(m, m);
    b.segment(1, m) = box.hi;
    A.block(1 + m, 0, m, m) = -Mat::Identity(m, m);
    b.segment(1 + m, m) = -box.lo;
    return ControlPolytope(std::move(A), std::move(b));
  }

  static ControlPolytope from_box(const Box& box) {
    const int m = box.dim();
    Mat A(2 * m, m);
    Vec b(2 * m);
    A.topRows(m) = Mat::Identity(m, m);
    b.head(m) = box.hi;
    A.bottomRows(m) = -Mat::Identity(m, m);
    b.tail(m) = -box.lo;
    return ControlPolytope(std::move(A), std::move(b));
  }
};

}  // namespace polsyn
