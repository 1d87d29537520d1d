#pragma once

#include <array>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "polsyn/dynamics.hpp"

namespace polsyn {

/// Planar ducted fan in forward flight. Physical state (v, gamma, beta,
/// beta_dot, h): airspeed, flight-path angle, pitch, pitch rate, height.
/// Aerodynamic forces are quadratics in the angle of attack alpha = beta -
/// gamma scaled by v^2, e.g. D(v, alpha) = v^2 (c0 + c1 a + c2 a^2). The
/// coefficient defaults are calibrated so that the published trim point
/// x* = [6, 0, 0.177, 0, 0], u* = [3.2, -0.138] (thrust, vector angle) is an
/// exact equilibrium; substituted parameter files are guarded by the trim
/// residual check in the tests.
struct DuctedFanParams {
  double mass_kg = 11.2;
  double inertia = 0.24;      // J [kg m^2]
  double weight_N = 4.9;      // effective weight (counterweighted rig)
  double moment_arm_m = 0.35; // l_T
  std::array<double, 3> drag_coeff{0.0850618174567545, 0.0, 0.12};
  std::array<double, 3> lift_coeff{-0.00010467682238585185, 0.75, 0.0};
  std::array<double, 3> moment_coeff{0.004570280736881161, -0.05, 0.0};

  // trim point and scaling
  double trim_speed = 6.0;
  double trim_pitch = 0.177;
  double trim_thrust = 3.2;
  double trim_vector_angle = -0.138;
  std::array<double, 5> state_scale{0.4, 1.0, 1.0, 1.0, 1.0};

  double drag(double v, double a) const {
    return v * v * (drag_coeff[0] + drag_coeff[1] * a + drag_coeff[2] * a * a);
  }
  double lift(double v, double a) const {
    return v * v * (lift_coeff[0] + lift_coeff[1] * a + lift_coeff[2] * a * a);
  }
  double moment(double v, double a) const {
    return v * v * (moment_coeff[0] + moment_coeff[1] * a + moment_coeff[2] * a * a);
  }

  Vec trim_state() const {
    Vec x(5);
    x << trim_speed, 0.0, trim_pitch, 0.0, 0.0;
    return x;
  }
  /// Trim input in the transformed (u_c, u_s) coordinates.
  Vec trim_input_cs() const {
    Vec u(2);
    u << trim_thrust * std::cos(trim_vector_angle), trim_thrust * std::sin(trim_vector_angle);
    return u;
  }

  static DuctedFanParams load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("DuctedFanParams: cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    DuctedFanParams p;
    p.mass_kg = j.at("mass_kg").get<double>();
    p.inertia = j.at("inertia").get<double>();
    p.weight_N = j.at("weight_N").get<double>();
    p.moment_arm_m = j.at("moment_arm_m").get<double>();
    auto& aero = j.at("aero");
    for (int i = 0; i < 3; ++i) {
      p.drag_coeff[i] = aero.at("drag").at(i).get<double>();
      p.lift_coeff[i] = aero.at("lift").at(i).get<double>();
      p.moment_coeff[i] = aero.at("moment").at(i).get<double>();
    }
    if (j.contains("trim")) {
      auto& t = j["trim"];
      p.trim_speed = t.at("speed").get<double>();
      p.trim_pitch = t.at("pitch").get<double>();
      p.trim_thrust = t.at("thrust").get<double>();
      p.trim_vector_angle = t.at("vector_angle").get<double>();
    }
    return p;
  }

  nlohmann::json to_json() const {
    return nlohmann::json{
        {"mass_kg", mass_kg},
        {"inertia", inertia},
        {"weight_N", weight_N},
        {"moment_arm_m", moment_arm_m},
        {"aero",
         {{"drag", drag_coeff}, {"lift", lift_coeff}, {"moment", moment_coeff}}},
        {"trim",
         {{"speed", trim_speed},
          {"pitch", trim_pitch},
          {"thrust", trim_thrust},
          {"vector_angle", trim_vector_angle}}}};
  }
};

/// Physical-coordinate rhs in the original (thrust, vector angle) inputs.
/// Kept alongside the transformed model so the input rewrite can be
/// cross-checked numerically.
inline Vec ducted_fan_rhs_original(const DuctedFanParams& p, const Vec& x, double thrust,
                                   double delta_u) {
  const double v = x[0], gamma = x[1], beta = x[2], beta_dot = x[3];
  const double a = beta - gamma;
  Vec dx(5);
  dx[0] = (-p.drag(v, a) - p.weight_N * std::sin(gamma) + thrust * std::cos(a + delta_u)) / p.mass_kg;
  dx[1] = (p.lift(v, a) - p.weight_N * std::cos(gamma) + thrust * std::sin(a + delta_u)) / (p.mass_kg * v);
  dx[2] = beta_dot;
  dx[3] = (p.moment(v, a) - thrust * p.moment_arm_m * std::sin(delta_u)) / p.inertia;
  dx[4] = v * std::sin(gamma);
  return dx;
}

/// Physical-coordinate rhs in the transformed inputs u_c = u cos(delta_u),
/// u_s = u sin(delta_u); affine in (u_c, u_s).
inline Vec ducted_fan_rhs_cs(const DuctedFanParams& p, const Vec& x, double uc, double us) {
  const double v = x[0], gamma = x[1], beta = x[2], beta_dot = x[3];
  const double a = beta - gamma;
  const double ca = std::cos(a), sa = std::sin(a);
  Vec dx(5);
  dx[0] = (-p.drag(v, a) - p.weight_N * std::sin(gamma) + uc * ca - us * sa) / p.mass_kg;
  dx[1] = (p.lift(v, a) - p.weight_N * std::cos(gamma) + uc * sa + us * ca) / (p.mass_kg * v);
  dx[2] = beta_dot;
  dx[3] = (p.moment(v, a) - p.moment_arm_m * us) / p.inertia;
  dx[4] = v * std::sin(gamma);
  return dx;
}

/// Model in shifted/scaled coordinates: z = s o (x - x*), input = (u_c, u_s)
/// minus the transformed trim input. Goal [-0.2, 0.2]^5, initial [-0.5, 0.5]^5.
inline PlantModel make_ducted_fan_model(const DuctedFanParams& p = DuctedFanParams{}) {
  PlantModel model;
  model.id = "ductedfan";
  model.state_dim = 5;
  model.input_dim = 2;

  const Vec xs = p.trim_state();
  const Vec us0 = p.trim_input_cs();
  Vec scale(5);
  for (int i = 0; i < 5; ++i) scale[i] = p.state_scale[i];

  auto unscale = [xs, scale](const Vec& z) { return Vec(xs + z.cwiseQuotient(scale)); };

  model.rhs = [p, us0, scale, unscale](const Vec& z, const Vec& u) {
    Vec dx = ducted_fan_rhs_cs(p, unscale(z), us0[0] + u[0], us0[1] + u[1]);
    return Vec(scale.cwiseProduct(dx));
  };
  model.drift = [p, us0, scale, unscale](const Vec& z) {
    Vec dx = ducted_fan_rhs_cs(p, unscale(z), us0[0], us0[1]);
    return Vec(scale.cwiseProduct(dx));
  };
  model.input_matrix = [p, scale, unscale](const Vec& z) {
    Vec x = unscale(z);
    const double a = x[2] - x[1];
    const double ca = std::cos(a), sa = std::sin(a);
    Mat g = Mat::Zero(5, 2);
    g(0, 0) = ca / p.mass_kg;
    g(0, 1) = -sa / p.mass_kg;
    g(1, 0) = sa / (p.mass_kg * x[0]);
    g(1, 1) = ca / (p.mass_kg * x[0]);
    g(3, 1) = -p.moment_arm_m / p.inertia;
    // row scaling from the coordinate change
    for (int i = 0; i < 5; ++i) g.row(i) *= scale[i];
    return g;
  };

  model.state_box = Box::cube(5, 2.0);
  Vec ulo(2), uhi(2);
  ulo << -3.0, -3.0;
  uhi << 9.0, 3.0;
  model.input_box = Box(ulo, uhi);
  model.initial_box = Box::cube(5, 0.5);
  model.goal_box = Box::cube(5, 0.2);
  model.validate();
  return model;
}

}  // namespace polsyn
