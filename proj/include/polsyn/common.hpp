#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace polsyn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Axis-aligned box given by per-dimension closed intervals.
struct Box {
  Vec lo;
  Vec hi;

  Box() = default;
  Box(Vec l, Vec h) : lo(std::move(l)), hi(std::move(h)) {
    if (lo.size() != hi.size()) throw std::invalid_argument("Box: lo/hi size mismatch");
    for (int i = 0; i < lo.size(); ++i)
      if (!(lo[i] <= hi[i])) throw std::invalid_argument("Box: lo > hi at dim " + std::to_string(i));
  }

  static Box cube(int dim, double half_width) {
    return Box(Vec::Constant(dim, -half_width), Vec::Constant(dim, half_width));
  }

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(const Vec& x, double tol = 0.0) const {
    for (int i = 0; i < lo.size(); ++i)
      if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
    return true;
  }

  /// Strict interior membership.
  bool contains_interior(const Vec& x) const {
    for (int i = 0; i < lo.size(); ++i)
      if (!(x[i] > lo[i] && x[i] < hi[i])) return false;
    return true;
  }

  Vec clamp(const Vec& x) const { return x.cwiseMax(lo).cwiseMin(hi); }

  Vec center() const { return 0.5 * (lo + hi); }
  Vec half_width() const { return 0.5 * (hi - lo); }

  /// Box scaled about its center by `factor`.
  Box scaled(double factor) const {
    Vec c = center(), h = half_width() * factor;
    return Box(c - h, c + h);
  }

  /// Componentwise interval containment: does this box contain `inner`?
  bool contains_box(const Box& inner, double tol = 0.0) const {
    for (int i = 0; i < lo.size(); ++i)
      if (inner.lo[i] < lo[i] - tol || inner.hi[i] > hi[i] + tol) return false;
    return true;
  }

  template <class Rng>
  Vec sample(Rng& rng) const {
    Vec x(dim());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < dim(); ++i) x[i] = lo[i] + (hi[i] - lo[i]) * u(rng);
    return x;
  }
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

/// splitmix64, used to derive independent substream seeds from one run seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + stream * 0x9e3779b97f4a7c15ULL + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(mix_seed(seed, stream));
}

}  // namespace polsyn
