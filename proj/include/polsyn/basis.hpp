#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "polsyn/common.hpp"

namespace polsyn {

/// A named scalar function of the state used as a basis term.
struct BasisTerm {
  enum class Kind { Coord, Sin, Cos };
  Kind kind = Kind::Coord;
  int coord = 0;

  double eval(const Vec& x) const {
    switch (kind) {
      case Kind::Coord: return x[coord];
      case Kind::Sin: return std::sin(x[coord]);
      case Kind::Cos: return std::cos(x[coord]);
    }
    return 0.0;
  }

  std::string name() const {
    switch (kind) {
      case Kind::Coord: return "x" + std::to_string(coord);
      case Kind::Sin: return "sin(x" + std::to_string(coord) + ")";
      case Kind::Cos: return "cos(x" + std::to_string(coord) + ")";
    }
    return "?";
  }

  static BasisTerm parse(const std::string& s) {
    BasisTerm t;
    auto num = [](const std::string& v) { return std::stoi(v); };
    if (s.rfind("sin(x", 0) == 0) {
      t.kind = Kind::Sin;
      t.coord = num(s.substr(5, s.size() - 6));
    } else if (s.rfind("cos(x", 0) == 0) {
      t.kind = Kind::Cos;
      t.coord = num(s.substr(5, s.size() - 6));
    } else if (s.rfind("x", 0) == 0) {
      t.kind = Kind::Coord;
      t.coord = num(s.substr(1));
    } else {
      throw std::invalid_argument("BasisTerm: cannot parse term '" + s + "'");
    }
    return t;
  }
};

/// Monomials of the basis terms up to a degree bound, enumerated in graded
/// lexicographic order (the ordering is part of the policy file format).
/// Every input channel carries its own copy of the monomial list, so the
/// total parameter count is K = input_dim * monomials.size().
struct BasisSet {
  std::vector<BasisTerm> terms;
  int degree = 1;
  int min_degree = 0;  // 0 includes the constant monomial (affine family)
  int num_channels = 1;
  std::vector<std::vector<int>> exponents;  // multi-indices, one per monomial

  static constexpr const char* ordering_tag = "grlex-v1";

  BasisSet() = default;
  BasisSet(std::vector<BasisTerm> t, int d, int min_d, int channels)
      : terms(std::move(t)), degree(d), min_degree(min_d), num_channels(channels) {
    if (degree < 1) throw std::invalid_argument("BasisSet: degree must be >= 1");
    if (min_degree < 0 || min_degree > degree) throw std::invalid_argument("BasisSet: bad min_degree");
    if (num_channels < 1) throw std::invalid_argument("BasisSet: bad channel count");
    enumerate();
  }

  int per_channel() const { return static_cast<int>(exponents.size()); }
  int param_count() const { return num_channels * per_channel(); }

  /// Values of the per-channel monomials at x.
  Vec eval_monomials(const Vec& x) const {
    const int t = static_cast<int>(terms.size());
    Vec tv(t);
    for (int i = 0; i < t; ++i) {
      tv[i] = terms[i].eval(x);
      if (!std::isfinite(tv[i]))
        throw std::runtime_error("BasisSet: non-finite value of term " + terms[i].name());
    }
    Vec out(per_channel());
    for (int k = 0; k < per_channel(); ++k) {
      double v = 1.0;
      for (int i = 0; i < t; ++i)
        for (int e = 0; e < exponents[k][i]; ++e) v *= tv[i];
      out[k] = v;
    }
    return out;
  }

 private:
  void enumerate() {
    const int t = static_cast<int>(terms.size());
    std::vector<int> alpha(t, 0);
    for (int g = min_degree; g <= degree; ++g) emit_degree(alpha, 0, g);
  }
  void emit_degree(std::vector<int>& alpha, int pos, int remaining) {
    if (pos == static_cast<int>(terms.size())) {
      if (remaining == 0) exponents.push_back(alpha);
      return;
    }
    // lexicographic within a degree: highest power on the earliest term first
    for (int e = remaining; e >= 0; --e) {
      alpha[pos] = e;
      emit_degree(alpha, pos + 1, remaining - e);
      alpha[pos] = 0;
    }
  }
};

/// Phi(x): input_dim x K block-diagonal matrix with Phi(x) theta = pre-clamp
/// policy output.
inline Mat eval_basis(const BasisSet& basis, const Vec& x) {
  const Vec mono = basis.eval_monomials(x);
  const int pc = basis.per_channel();
  Mat phi = Mat::Zero(basis.num_channels, basis.param_count());
  for (int c = 0; c < basis.num_channels; ++c) phi.block(c, c * pc, 1, pc) = mono.transpose();
  return phi;
}

/// Linear-in-parameters policy pi_theta(x) = Phi(x) theta.
struct PolicyParams {
  BasisSet basis;
  Vec theta;
  std::string plant_id;
  std::string run_id;
  int iterations = 0;

  PolicyParams() = default;
  PolicyParams(BasisSet b, Vec th) : basis(std::move(b)), theta(std::move(th)) {
    if (theta.size() != basis.param_count())
      throw std::invalid_argument("PolicyParams: theta length does not match basis");
  }
};

/// Pre-clamp (exactly linear in theta) policy output.
inline Vec eval_policy_raw(const PolicyParams& p, const Vec& x) {
  const Vec mono = p.basis.eval_monomials(x);
  const int pc = p.basis.per_channel();
  Vec u(p.basis.num_channels);
  for (int c = 0; c < p.basis.num_channels; ++c)
    u[c] = mono.dot(p.theta.segment(c * pc, pc));
  return u;
}

/// Deployed policy: linear form followed by saturation to the input box.
inline Vec eval_policy(const PolicyParams& p, const Vec& x, const Box& input_box) {
  return input_box.clamp(eval_policy_raw(p, x));
}

inline nlohmann::json policy_to_json(const PolicyParams& p) {
  std::vector<std::string> names;
  for (const auto& t : p.basis.terms) names.push_back(t.name());
  nlohmann::json j;
  j["basis"] = {{"terms", names},
                {"degree", p.basis.degree},
                {"min_degree", p.basis.min_degree},
                {"channels", p.basis.num_channels},
                {"ordering", BasisSet::ordering_tag}};
  j["theta"] = std::vector<double>(p.theta.data(), p.theta.data() + p.theta.size());
  j["plant_id"] = p.plant_id;
  j["provenance"] = {{"run_id", p.run_id}, {"iterations", p.iterations}};
  return j;
}

inline PolicyParams policy_from_json(const nlohmann::json& j) {
  const auto& jb = j.at("basis");
  if (jb.at("ordering").get<std::string>() != BasisSet::ordering_tag)
    throw std::runtime_error("policy_from_json: unknown basis ordering tag");
  std::vector<BasisTerm> terms;
  for (const auto& s : jb.at("terms")) terms.push_back(BasisTerm::parse(s.get<std::string>()));
  BasisSet basis(std::move(terms), jb.at("degree").get<int>(), jb.at("min_degree").get<int>(),
                 jb.at("channels").get<int>());
  std::vector<double> th = j.at("theta").get<std::vector<double>>();
  PolicyParams p(std::move(basis), Eigen::Map<const Vec>(th.data(), th.size()));
  p.plant_id = j.value("plant_id", "");
  if (j.contains("provenance")) {
    p.run_id = j["provenance"].value("run_id", "");
    p.iterations = j["provenance"].value("iterations", 0);
  }
  return p;
}

/// Convenience families used by the case studies.
inline BasisSet make_state_basis(int state_dim, int input_dim, bool affine) {
  std::vector<BasisTerm> terms;
  for (int i = 0; i < state_dim; ++i) terms.push_back({BasisTerm::Kind::Coord, i});
  return BasisSet(std::move(terms), 1, affine ? 0 : 1, input_dim);
}

}  // namespace polsyn
