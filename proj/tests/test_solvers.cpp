#include <doctest.h>

#include "polsyn/solvers.hpp"

using namespace polsyn;

namespace {

// rows of a box lo <= x <= hi
void box_rows(const Vec& lo, const Vec& hi, Mat& A, Vec& b) {
  int n = static_cast<int>(lo.size());
  A = Mat::Zero(2 * n, n);
  b.resize(2 * n);
  for (int i = 0; i < n; ++i) {
    A(i, i) = 1.0;
    b[i] = hi[i];
    A(n + i, i) = -1.0;
    b[n + i] = -lo[i];
  }
}

}  // namespace

TEST_CASE("max_min_slack finds the center of a box") {
  Mat A;
  Vec b;
  Vec lo(3), hi(3);
  lo << -1.0, 2.0, -5.0;
  hi << 3.0, 4.0, -1.0;
  box_rows(lo, hi, A, b);
  auto r = max_min_slack(A, b);
  CHECK(r.slack == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.x[1] == doctest::Approx(3.0).epsilon(1e-4));
  CHECK(r.x[2] == doctest::Approx(-3.0).epsilon(1e-4));
}

TEST_CASE("max_min_slack reports infeasibility with a negative slack") {
  Mat A(2, 1);
  Vec b(2);
  A << 1.0, -1.0;
  b << -1.0, -1.0;  // x <= -1 and x >= 1
  auto r = max_min_slack(A, b);
  CHECK(r.slack == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("max_min_slack on a degenerate (single point) set") {
  Mat A(2, 1);
  Vec b(2);
  A << 1.0, -1.0;
  b << 2.0, -2.0;  // x == 2
  auto r = max_min_slack(A, b);
  CHECK(std::abs(r.slack) <= 1e-7);
  CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("max_min_slack slack matches Chebyshev radius of a simplex") {
  // triangle x >= 0, y >= 0, x + y <= 1: inradius = (2 - sqrt(2)) / 2
  Mat A(3, 2);
  Vec b(3);
  A << -1.0, 0.0, 0.0, -1.0, 1.0, 1.0;
  b << 0.0, 0.0, 1.0;
  auto r = max_min_slack(A, b);
  double inradius = (2.0 - std::sqrt(2.0)) / 2.0;
  CHECK(r.slack == doctest::Approx(inradius).epsilon(1e-5));
}
