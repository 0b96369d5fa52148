#pragma once

#include <Eigen/Core>

#include "symreg/expr.hpp"

namespace symreg {

// Row-wise evaluation result. Rows where evaluation hit a domain violation
// (log of a non-positive value, division by zero, negative base with a
// non-integer exponent, sqrt of a negative, overflow) hold NaN.
struct EvalResult {
  Eigen::VectorXd values;
  bool valid = true;  // true iff no poisoned rows
};

// Evaluates a complete expression on every row of X (one column per input
// variable). Pure: identical inputs give bitwise-identical outputs.
// Throws UsageError if the tree is incomplete or references a variable
// beyond X's columns.
EvalResult evaluate(const TokenLibrary& lib, const Expression& expr,
                    const Eigen::MatrixXd& X);

// Numeric stand-in for symbolic equivalence: samples `n_points` quasi-random
// points in the box [lo, hi]^V and reports true iff the two expressions agree
// to within 1e-9 * (1 + max |target|) everywhere. Points where either side
// poisons are skipped; if more than 10% of points poison, reports false.
bool numeric_equiv(const TokenLibrary& lib, const Expression& candidate,
                   const Expression& target, const Eigen::VectorXd& lo,
                   const Eigen::VectorXd& hi, int n_points);

// Deterministic low-discrepancy points in the given box (Halton sequence).
Eigen::MatrixXd quasi_random_points(const Eigen::VectorXd& lo,
                                    const Eigen::VectorXd& hi, int n_points);

}  // namespace symreg
