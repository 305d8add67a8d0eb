#include "ucmpc/state_space.hpp"

namespace ucmpc {

StateSpace::StateSpace(Mat a, Mat b, Mat c, Mat d)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)) {
  const int nn = static_cast<int>(A.rows());
  if (A.cols() != nn) throw std::invalid_argument("StateSpace: A not square");
  if (B.rows() != nn) throw std::invalid_argument("StateSpace: B rows");
  if (C.cols() != nn) throw std::invalid_argument("StateSpace: C cols");
  if (D.rows() != C.rows() || D.cols() != B.cols()) {
    throw std::invalid_argument("StateSpace: D shape");
  }
}

StateSpace cascade(const StateSpace& first, const StateSpace& then) {
  if (then.inputs() != first.outputs()) {
    throw std::invalid_argument("cascade: output/input dimension mismatch");
  }
  const int n1 = first.states();
  const int n2 = then.states();
  Mat a = Mat::Zero(n1 + n2, n1 + n2);
  a.topLeftCorner(n1, n1) = first.A;
  a.bottomLeftCorner(n2, n1) = then.B * first.C;
  a.bottomRightCorner(n2, n2) = then.A;
  Mat b(n1 + n2, first.inputs());
  b.topRows(n1) = first.B;
  b.bottomRows(n2) = then.B * first.D;
  Mat c(then.outputs(), n1 + n2);
  c.leftCols(n1) = then.D * first.C;
  c.rightCols(n2) = then.C;
  Mat d = then.D * first.D;
  return StateSpace(std::move(a), std::move(b), std::move(c), std::move(d));
}

double induced_inf_norm(const Mat& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace ucmpc
