#pragma once

#include "ucmpc/lin_core.hpp"

namespace ucmpc {

/// Continuous-time realization xdot = A x + B u, y = C x + D u.
struct StateSpace {
  Mat A;
  Mat B;
  Mat C;
  Mat D;

  StateSpace() = default;
  StateSpace(Mat a, Mat b, Mat c, Mat d);

  int states() const { return static_cast<int>(A.rows()); }
  int inputs() const { return static_cast<int>(B.cols()); }
  int outputs() const { return static_cast<int>(C.rows()); }
};

/// Cascade u -> first -> then -> y (series interconnection).
StateSpace cascade(const StateSpace& first, const StateSpace& then);

/// Induced infinity norm of a matrix: max absolute row sum.
double induced_inf_norm(const Mat& m);

}  // namespace ucmpc
