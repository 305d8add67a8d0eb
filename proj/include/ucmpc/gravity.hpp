#pragma once

#include "ucmpc/lin_core.hpp"

#include <tuple>

namespace ucmpc {

/// Spherical-harmonic gravity model (unnormalized Stokes coefficients,
/// degree <= 4) of a body rotating at constant rate about +z.
struct GravityField {
  double mu = 0.0;    // km^3/s^2
  double R0 = 1.0;    // km reference radius
  Mat C;              // (degree+1)x(degree+1), lower triangular; C(0,0) = 1
  Mat S;              // same layout; S(l,0) = 0
  double n_spin = 0.0;  // rad/s

  int degree() const { return static_cast<int>(C.rows()) - 1; }

  static GravityField point_mass(double mu, double n_spin = 0.0);
};

/// Degree-4 Stokes coefficients of a constant-density triaxial ellipsoid
/// with semi-axes c <= b <= a, referenced to radius r0. Returns (C, S).
std::pair<Mat, Mat> ellipsoid_stokes(double a, double b, double c, double r0);

/// Full field for the ellipsoid; r0 <= 0 selects the mean semi-axis.
GravityField ellipsoid_field(double a, double b, double c, double mu,
                             double n_spin, double r0 = 0.0);

/// Harmonic-series potential, positive convention (point mass: mu / r).
double gravity_potential(const GravityField& field, const Vec& pos);

/// Gravitational acceleration, the gradient of gravity_potential
/// (point mass: -mu * pos / r^3). Throws at the origin.
Vec gravity_accel(const GravityField& field, const Vec& pos);

/// Rotating-frame translational dynamics, state [x y z vx vy vz]:
///   ax = g_x + 2 n vy + n^2 x + u_x
///   ay = g_y - 2 n vx + n^2 y + u_y
///   az = g_z + u_z
Vec asteroid_true_dynamics(const GravityField& field, const Vec& state,
                           const Vec& u);

/// Linearization about a zero-velocity equilibrium X0: returns (A, B, U0)
/// with U0 the hover input making X0 an equilibrium, A by central finite
/// differences of the dynamics under this field, and B = [0; I3].
std::tuple<Mat, Mat, Vec> linearize_at(const GravityField& field,
                                       const Vec& x0_state);

}  // namespace ucmpc
