#include "ucmpc/gravity.hpp"

#include <cmath>
#include <stdexcept>

namespace ucmpc {
namespace {

// V/W recursion up to `deg` on scaled position ratios. V(l,m), W(l,m) hold
// the interior solid-harmonic pair; the acceleration formulas consume one
// degree beyond the field's.
void solid_harmonics(const GravityField& field, const Vec& pos, int deg,
                     Mat& v, Mat& w) {
  const double x = pos(0), y = pos(1), z = pos(2);
  const double r2 = x * x + y * y + z * z;
  if (r2 <= 0.0) {
    throw std::domain_error("gravity evaluation at the field origin");
  }
  const double r0 = field.R0;
  const double xf = x * r0 / r2;
  const double yf = y * r0 / r2;
  const double zf = z * r0 / r2;
  const double rf = r0 * r0 / r2;

  v = Mat::Zero(deg + 1, deg + 1);
  w = Mat::Zero(deg + 1, deg + 1);
  v(0, 0) = r0 / std::sqrt(r2);
  for (int m = 1; m <= deg; ++m) {
    v(m, m) = (2 * m - 1) * (xf * v(m - 1, m - 1) - yf * w(m - 1, m - 1));
    w(m, m) = (2 * m - 1) * (xf * w(m - 1, m - 1) + yf * v(m - 1, m - 1));
  }
  for (int m = 0; m <= deg; ++m) {
    for (int l = m + 1; l <= deg; ++l) {
      const double c1 = double(2 * l - 1) / (l - m);
      const double c2 = double(l + m - 1) / (l - m);
      v(l, m) = c1 * zf * v(l - 1, m) - (l - 2 >= m ? c2 * rf * v(l - 2, m) : 0.0);
      w(l, m) = c1 * zf * w(l - 1, m) - (l - 2 >= m ? c2 * rf * w(l - 2, m) : 0.0);
    }
  }
}

}  // namespace

GravityField GravityField::point_mass(double mu, double n_spin) {
  GravityField f;
  f.mu = mu;
  f.R0 = 1.0;
  f.C = Mat::Zero(1, 1);
  f.C(0, 0) = 1.0;
  f.S = Mat::Zero(1, 1);
  f.n_spin = n_spin;
  return f;
}

std::pair<Mat, Mat> ellipsoid_stokes(double a, double b, double c, double r0) {
  if (!(c <= b && b <= a)) {
    throw std::domain_error("ellipsoid_stokes: semi-axes must satisfy c <= b <= a");
  }
  if (!(r0 > 0.0)) {
    throw std::domain_error("ellipsoid_stokes: reference radius must be > 0");
  }
  Mat cm = Mat::Zero(5, 5);
  Mat sm = Mat::Zero(5, 5);
  cm(0, 0) = 1.0;
  const double r02 = r0 * r0;
  cm(2, 0) = (c * c - (a * a + b * b)) / (2.0 * 5.0 * r02);
  cm(2, 2) = (a * a - b * b) / (20.0 * r02);
  cm(4, 0) = (15.0 / 7.0) * (cm(2, 0) * cm(2, 0) + 2.0 * cm(2, 2) * cm(2, 2));
  cm(4, 2) = (5.0 / 7.0) * cm(2, 0) * cm(2, 2);
  cm(4, 4) = (5.0 / 28.0) * cm(2, 2) * cm(2, 2);
  return {cm, sm};
}

GravityField ellipsoid_field(double a, double b, double c, double mu,
                             double n_spin, double r0) {
  if (r0 <= 0.0) r0 = (a + b + c) / 3.0;
  GravityField f;
  f.mu = mu;
  f.R0 = r0;
  std::tie(f.C, f.S) = ellipsoid_stokes(a, b, c, r0);
  f.n_spin = n_spin;
  return f;
}

double gravity_potential(const GravityField& field, const Vec& pos) {
  const int deg = field.degree();
  Mat v, w;
  solid_harmonics(field, pos, deg, v, w);
  double sum = 0.0;
  for (int l = 0; l <= deg; ++l) {
    for (int m = 0; m <= l; ++m) {
      sum += field.C(l, m) * v(l, m) + field.S(l, m) * w(l, m);
    }
  }
  return field.mu / field.R0 * sum;
}

Vec gravity_accel(const GravityField& field, const Vec& pos) {
  const int deg = field.degree();
  Mat v, w;
  solid_harmonics(field, pos, deg + 1, v, w);
  const double scale = field.mu / (field.R0 * field.R0);
  double ax = 0.0, ay = 0.0, az = 0.0;
  for (int l = 0; l <= deg; ++l) {
    for (int m = 0; m <= l; ++m) {
      const double c = field.C(l, m);
      const double s = field.S(l, m);
      if (m == 0) {
        ax += -c * v(l + 1, 1);
        ay += -c * w(l + 1, 1);
      } else {
        const double fac = double(l - m + 1) * double(l - m + 2);
        ax += 0.5 * (-c * v(l + 1, m + 1) - s * w(l + 1, m + 1) +
                     fac * (c * v(l + 1, m - 1) + s * w(l + 1, m - 1)));
        ay += 0.5 * (-c * w(l + 1, m + 1) + s * v(l + 1, m + 1) +
                     fac * (-c * w(l + 1, m - 1) + s * v(l + 1, m - 1)));
      }
      az += double(l - m + 1) * (-c * v(l + 1, m) - s * w(l + 1, m));
    }
  }
  Vec out(3);
  out << scale * ax, scale * ay, scale * az;
  return out;
}

Vec asteroid_true_dynamics(const GravityField& field, const Vec& state,
                           const Vec& u) {
  if (state.size() != 6 || u.size() != 3) {
    throw std::invalid_argument("asteroid_true_dynamics: expected 6-state, 3-input");
  }
  const Vec g = gravity_accel(field, state.head(3));
  const double n = field.n_spin;
  Vec dx(6);
  dx.head(3) = state.tail(3);
  dx(3) = g(0) + 2.0 * n * state(4) + n * n * state(0) + u(0);
  dx(4) = g(1) - 2.0 * n * state(3) + n * n * state(1) + u(1);
  dx(5) = g(2) + u(2);
  return dx;
}

std::tuple<Mat, Mat, Vec> linearize_at(const GravityField& field,
                                       const Vec& x0_state) {
  if (x0_state.size() != 6) {
    throw std::invalid_argument("linearize_at: expected a 6-state");
  }
  if (x0_state.tail(3).cwiseAbs().maxCoeff() > 0.0) {
    throw std::invalid_argument("linearize_at: equilibrium must have zero velocity");
  }
  const Vec drift = asteroid_true_dynamics(field, x0_state, Vec::Zero(3));
  const Vec u0 = -drift.tail(3);

  const double h = 1e-2;
  Mat a(6, 6);
  for (int k = 0; k < 6; ++k) {
    Vec xp = x0_state, xm = x0_state;
    xp(k) += h;
    xm(k) -= h;
    a.col(k) = (asteroid_true_dynamics(field, xp, u0) -
                asteroid_true_dynamics(field, xm, u0)) /
               (2.0 * h);
  }
  Mat b = Mat::Zero(6, 3);
  b.block(3, 0, 3, 3) = Mat::Identity(3, 3);
  return {a, b, u0};
}

}  // namespace ucmpc
