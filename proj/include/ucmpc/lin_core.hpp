#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <utility>

namespace ucmpc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Thrown when a requested design/synthesis step has no feasible answer.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Axis-aligned box {x : lo <= x <= hi}. Bounds of magnitude >= kUnbounded
/// are treated as absent by constraint-building code.
struct Box {
  Vec lo;
  Vec hi;

  static constexpr double kUnbounded = 1e30;

  Box() = default;
  Box(Vec lo_, Vec hi_);

  /// Symmetric box [-r, r]^n.
  static Box symmetric(const Vec& r);
  static Box unbounded(int dim);

  int dim() const { return static_cast<int>(lo.size()); }
  Vec center() const { return 0.5 * (lo + hi); }
  Vec half_width() const { return 0.5 * (hi - lo); }
  bool contains(const Vec& x, double tol = 0.0) const;
  bool is_symmetric(double tol = 1e-12) const;
};

/// Intersection (boxes must share dimension).
Box box_intersect(const Box& a, const Box& b);

/// Pontryagin (erosion) difference X - Y = {z : z + y in X for all y in Y}.
/// For boxes this is per-axis [lo_x - lo_y, hi_x - hi_y]. Throws
/// InfeasibleError if the result is empty on some axis.
Box box_pontryagin_diff(const Box& x, const Box& y);

/// Convenience overload eroding by the symmetric box [-r, r]^n.
Box box_pontryagin_diff(const Box& x, const Vec& r);

/// Left pseudo-inverse of a full-column-rank matrix, pinv(B)*B = I.
Mat pseudo_inverse(const Mat& b);

/// True if every eigenvalue of A has real part < -margin.
bool is_hurwitz(const Mat& a, double margin = 0.0);

/// xdot = A x + B (u + matched part) + Bu (unmatched part); B has full column
/// rank, Bu spans the complementary directions (Bu' B = 0, [B Bu] invertible).
struct LtiPlant {
  Mat A;
  Mat B;
  Mat Bu;
  Mat Bdag;    // left pseudo-inverse of B
  Mat Budag;   // left pseudo-inverse of Bu (empty when Bu has no columns)

  LtiPlant() = default;
  LtiPlant(Mat a, Mat b, Mat bu);

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int nw() const { return static_cast<int>(Bu.cols()); }
};

/// Split a lumped disturbance d into matched/unmatched parts,
/// d = B*fm + Bu*fum (exact because [B Bu] is square and invertible).
struct MatchedSplit {
  Vec fm;
  Vec fum;
};
MatchedSplit decompose_uncertainty(const LtiPlant& plant, const Vec& d);

/// State-feedback gain validated against a plant: A + B*Kx must be Hurwitz.
struct FeedbackGain {
  Mat Kx;

  FeedbackGain() = default;
  FeedbackGain(const LtiPlant& plant, Mat kx, double margin = 0.0);

  Mat closed_loop(const LtiPlant& plant) const { return plant.A + plant.B * Kx; }
};

/// Matrix exponential (scaling-and-squaring with Pade approximants).
Mat matrix_exponential(const Mat& a);

/// Exact zero-order-hold discretization of xdot = A x + B u over one step:
/// x+ = Ad x + Bd u, computed from the exponential of the augmented matrix
/// [[A, B], [0, 0]] so no inverse of A is needed.
std::pair<Mat, Mat> zoh_discretize(const Mat& a, const Mat& b, double dt);

/// Integral of the matrix exponential, int_0^T exp(A s) ds, via the same
/// augmented-exponential construction (cancellation-free for small T).
Mat expm_integral(const Mat& a, double t);

/// One classical Runge-Kutta 4 step of xdot = f(t, x).
Vec rk4_step(const std::function<Vec(double, const Vec&)>& f, double t,
             const Vec& x, double dt);

}  // namespace ucmpc
