#pragma once

#include <cmath>
#include <string>

#include "polsyn/dynamics.hpp"

namespace polsyn {

/// Kinematic car in road-relative coordinates. Per car the reduced state is
/// (y, v, alpha, beta): lateral deviation, speed relative to the nominal
/// cruise speed v0, heading angle, and steering tangent. The x coordinate
/// along the road is dropped.
///
///   y'     = (v + v0) sin(alpha)
///   v'     = u1
///   alpha' = ((v + v0) / b) beta
///   beta'  = u2
///
/// `num_cars` dynamically decoupled copies are stacked into one model with a
/// single centralized input vector (2 inputs per car).
struct CarParams {
  int num_cars = 1;
  double axle_base = 3.0;      // b [m]
  double nominal_speed = 10.0; // v0 [m/s]
};

inline PlantModel make_car_model(const CarParams& p = CarParams{}) {
  if (p.num_cars < 1) throw std::invalid_argument("make_car_model: num_cars must be >= 1");
  const int l = p.num_cars;
  const int n = 4 * l;
  const int m = 2 * l;
  const double b = p.axle_base;
  const double v0 = p.nominal_speed;

  PlantModel model;
  model.id = "car" + std::to_string(l);
  model.state_dim = n;
  model.input_dim = m;

  model.rhs = [l, b, v0](const Vec& x, const Vec& u) {
    Vec dx(4 * l);
    for (int c = 0; c < l; ++c) {
      const double v = x[4 * c + 1];
      const double alpha = x[4 * c + 2];
      const double beta = x[4 * c + 3];
      dx[4 * c + 0] = (v + v0) * std::sin(alpha);
      dx[4 * c + 1] = u[2 * c + 0];
      dx[4 * c + 2] = ((v + v0) / b) * beta;
      dx[4 * c + 3] = u[2 * c + 1];
    }
    return dx;
  };
  model.drift = [l, b, v0](const Vec& x) {
    Vec f(4 * l);
    for (int c = 0; c < l; ++c) {
      const double v = x[4 * c + 1];
      f[4 * c + 0] = (v + v0) * std::sin(x[4 * c + 2]);
      f[4 * c + 1] = 0.0;
      f[4 * c + 2] = ((v + v0) / b) * x[4 * c + 3];
      f[4 * c + 3] = 0.0;
    }
    return f;
  };
  model.input_matrix = [l](const Vec&) {
    Mat g = Mat::Zero(4 * l, 2 * l);
    for (int c = 0; c < l; ++c) {
      g(4 * c + 1, 2 * c + 0) = 1.0;
      g(4 * c + 3, 2 * c + 1) = 1.0;
    }
    return g;
  };

  Vec xlo(n), xhi(n), ulo(m), uhi(m), ilo(n), ihi(n);
  for (int c = 0; c < l; ++c) {
    xlo[4 * c + 0] = -10.0; xhi[4 * c + 0] = 10.0;  // y
    xlo[4 * c + 1] = -8.0;  xhi[4 * c + 1] = 8.0;   // v (relative)
    xlo[4 * c + 2] = -2.0;  xhi[4 * c + 2] = 2.0;   // alpha
    xlo[4 * c + 3] = -3.0;  xhi[4 * c + 3] = 3.0;   // beta
    ilo[4 * c + 0] = -2.0;  ihi[4 * c + 0] = 2.0;
    ilo[4 * c + 1] = -2.0;  ihi[4 * c + 1] = 2.0;
    ilo[4 * c + 2] = -1.0;  ihi[4 * c + 2] = 1.0;
    ilo[4 * c + 3] = -1.0;  ihi[4 * c + 3] = 1.0;
    ulo[2 * c + 0] = -1.0;  uhi[2 * c + 0] = 1.0;   // u1
    ulo[2 * c + 1] = -3.0;  uhi[2 * c + 1] = 3.0;   // u2
  }
  model.state_box = Box(xlo, xhi);
  model.input_box = Box(ulo, uhi);
  model.initial_box = Box(ilo, ihi);
  model.goal_box = Box::cube(n, 0.1);
  model.validate();
  return model;
}

}  // namespace polsyn
