#pragma once

#include <Eigen/Core>

#include "symreg/eval.hpp"

namespace symreg {

struct LMConfig {
  int max_iterations = 50;
  double initial_damping = 1e-3;
  double damping_increase = 2.0;  // multiplied on a rejected step
  double damping_decrease = 3.0;  // divided on an accepted step
  double residual_tol = 1e-14;    // relative SSE improvement below this stops
  double param_tol = 1e-12;       // step norm below this (relative) stops
  double initial_value = 1.0;     // starting value for every constant

  void validate() const;
};

struct LMResult {
  std::vector<double> constants;
  double sse = 0.0;
  bool poisoned = false;  // no finite evaluation was ever reached
  int iterations = 0;
};

// Fits the expression's constant tokens to (X, y) by damped Gauss-Newton
// least squares. The Jacobian comes from central finite differences with
// step 1e-6 * (1 + |c|); non-finite trial points are rejected like failed
// steps. Expressions without constant tokens are returned unchanged with
// their plain evaluation SSE. Deterministic.
LMResult fit_constants(const TokenLibrary& lib, const Expression& expr,
                       const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const LMConfig& cfg);

}  // namespace symreg
