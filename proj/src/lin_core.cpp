#include "ucmpc/lin_core.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>

namespace ucmpc {

Box::Box(Vec lo_, Vec hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size()) {
    throw std::invalid_argument("Box: lo/hi dimension mismatch");
  }
  if (((hi - lo).array() < 0.0).any()) {
    throw std::invalid_argument("Box: lo > hi on some axis");
  }
}

Box Box::symmetric(const Vec& r) {
  if ((r.array() < 0.0).any()) {
    throw std::invalid_argument("Box::symmetric: negative radius");
  }
  return Box(-r, r);
}

Box Box::unbounded(int dim) {
  return Box(Vec::Constant(dim, -kUnbounded), Vec::Constant(dim, kUnbounded));
}

bool Box::contains(const Vec& x, double tol) const {
  if (x.size() != lo.size()) return false;
  return (x.array() >= lo.array() - tol).all() &&
         (x.array() <= hi.array() + tol).all();
}

bool Box::is_symmetric(double tol) const {
  return ((lo + hi).array().abs() <= tol).all();
}

Box box_intersect(const Box& a, const Box& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("box_intersect: dimension mismatch");
  }
  return Box(a.lo.cwiseMax(b.lo), a.hi.cwiseMin(b.hi));
}

Box box_pontryagin_diff(const Box& x, const Box& y) {
  if (x.dim() != y.dim()) {
    throw std::invalid_argument("box_pontryagin_diff: dimension mismatch");
  }
  Vec lo = x.lo - y.lo;
  Vec hi = x.hi - y.hi;
  for (int i = 0; i < lo.size(); ++i) {
    if (lo[i] > hi[i]) {
      throw InfeasibleError("box_pontryagin_diff: empty on axis " +
                            std::to_string(i));
    }
  }
  return Box(std::move(lo), std::move(hi));
}

Box box_pontryagin_diff(const Box& x, const Vec& r) {
  return box_pontryagin_diff(x, Box::symmetric(r));
}

Mat pseudo_inverse(const Mat& b) {
  if (b.rows() < b.cols()) {
    throw std::invalid_argument("pseudo_inverse: more columns than rows");
  }
  if (b.cols() == 0) return Mat::Zero(0, b.rows());
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(b);
  if (cod.rank() < b.cols()) {
    throw std::invalid_argument("pseudo_inverse: rank-deficient matrix");
  }
  return cod.pseudoInverse();
}

bool is_hurwitz(const Mat& a, double margin) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("is_hurwitz: matrix not square");
  }
  if (a.rows() == 0) return true;
  Eigen::EigenSolver<Mat> es(a, /*computeEigenvectors=*/false);
  return (es.eigenvalues().real().array() < -margin).all();
}

LtiPlant::LtiPlant(Mat a, Mat b, Mat bu)
    : A(std::move(a)), B(std::move(b)), Bu(std::move(bu)) {
  const int nn = static_cast<int>(A.rows());
  if (A.cols() != nn) throw std::invalid_argument("LtiPlant: A not square");
  if (B.rows() != nn) throw std::invalid_argument("LtiPlant: B row mismatch");
  if (Bu.size() == 0) Bu = Mat::Zero(nn, 0);
  if (Bu.rows() != nn) throw std::invalid_argument("LtiPlant: Bu row mismatch");
  if (B.cols() + Bu.cols() != nn) {
    throw std::invalid_argument(
        "LtiPlant: B and Bu columns must jointly span the state space");
  }

  Bdag = pseudo_inverse(B);  // also verifies full column rank

  if (Bu.cols() > 0) {
    // Orthogonality of the unmatched directions, scale-normalized.
    Mat cross = Bu.transpose() * B;
    for (int i = 0; i < cross.rows(); ++i) {
      for (int j = 0; j < cross.cols(); ++j) {
        double scale = Bu.col(i).norm() * B.col(j).norm();
        if (scale > 0.0 && std::abs(cross(i, j)) / scale > 1e-10) {
          throw std::invalid_argument(
              "LtiPlant: Bu not orthogonal to B (entry " + std::to_string(i) +
              "," + std::to_string(j) + ")");
        }
      }
    }
    Budag = pseudo_inverse(Bu);

    Mat full(nn, nn);
    full << B, Bu;
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(full);
    if (cod.rank() < nn) {
      throw std::invalid_argument("LtiPlant: [B Bu] is rank deficient");
    }
  } else {
    Budag = Mat::Zero(0, nn);
  }
}

MatchedSplit decompose_uncertainty(const LtiPlant& plant, const Vec& d) {
  if (d.size() != plant.n()) {
    throw std::invalid_argument("decompose_uncertainty: dimension mismatch");
  }
  MatchedSplit out;
  out.fm = plant.Bdag * d;
  out.fum = plant.Budag * d;
  return out;
}

FeedbackGain::FeedbackGain(const LtiPlant& plant, Mat kx, double margin)
    : Kx(std::move(kx)) {
  if (Kx.rows() != plant.m() || Kx.cols() != plant.n()) {
    throw std::invalid_argument("FeedbackGain: dimension mismatch");
  }
  if (!is_hurwitz(plant.A + plant.B * Kx, margin)) {
    throw std::invalid_argument("FeedbackGain: A + B*Kx is not Hurwitz");
  }
}

Mat matrix_exponential(const Mat& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("matrix_exponential: matrix not square");
  }
  return a.exp();
}

std::pair<Mat, Mat> zoh_discretize(const Mat& a, const Mat& b, double dt) {
  const int nn = static_cast<int>(a.rows());
  const int mm = static_cast<int>(b.cols());
  Mat aug = Mat::Zero(nn + mm, nn + mm);
  aug.topLeftCorner(nn, nn) = a * dt;
  aug.topRightCorner(nn, mm) = b * dt;
  Mat e = matrix_exponential(aug);
  return {e.topLeftCorner(nn, nn), e.topRightCorner(nn, mm)};
}

Mat expm_integral(const Mat& a, double t) {
  const int nn = static_cast<int>(a.rows());
  return zoh_discretize(a, Mat::Identity(nn, nn), t).second;
}

Vec rk4_step(const std::function<Vec(double, const Vec&)>& f, double t,
             const Vec& x, double dt) {
  Vec k1 = f(t, x);
  Vec k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1);
  Vec k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2);
  Vec k4 = f(t + dt, x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace ucmpc
