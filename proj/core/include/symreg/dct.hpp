#pragma once

#include <Eigen/Core>

namespace symreg {

// Orthonormal DCT-II matrix: C(k, n) = a_k * cos(pi/N * (n + 1/2) * k) with
// a_0 = sqrt(1/N) and a_k = sqrt(2/N) otherwise. Satisfies C^T C = I.
Eigen::MatrixXd dct_matrix(int N);

// Frequency representation of row-sequence H (one row per element).
Eigen::MatrixXd dct_forward(const Eigen::MatrixXd& H);

// Keeps only the lowest min(M, N) frequency rows.
Eigen::MatrixXd clip_frequencies(const Eigen::MatrixXd& freq, int M);

// Transforms min(M, N) frequency rows back to N sequence rows by zero-padding
// the dropped high frequencies.
Eigen::MatrixXd idct_restore(const Eigen::MatrixXd& freq, int N);

}  // namespace symreg
