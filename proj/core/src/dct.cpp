#include "symreg/dct.hpp"

#include <cmath>

#include "symreg/errors.hpp"

namespace symreg {

Eigen::MatrixXd dct_matrix(int N) {
  if (N < 1) throw UsageError("dct_matrix: N must be positive");
  Eigen::MatrixXd C(N, N);
  const double pi = 3.14159265358979323846;
  const double a0 = std::sqrt(1.0 / N);
  const double ak = std::sqrt(2.0 / N);
  for (int k = 0; k < N; ++k)
    for (int n = 0; n < N; ++n)
      C(k, n) = (k == 0 ? a0 : ak) * std::cos(pi / N * (n + 0.5) * k);
  return C;
}

Eigen::MatrixXd dct_forward(const Eigen::MatrixXd& H) {
  return dct_matrix(static_cast<int>(H.rows())) * H;
}

Eigen::MatrixXd clip_frequencies(const Eigen::MatrixXd& freq, int M) {
  if (M < 1) throw UsageError("clip_frequencies: M must be positive");
  const int keep = std::min<int>(M, static_cast<int>(freq.rows()));
  return freq.topRows(keep);
}

Eigen::MatrixXd idct_restore(const Eigen::MatrixXd& freq, int N) {
  const int M = static_cast<int>(freq.rows());
  if (M > N) throw UsageError("idct_restore: more frequency rows than outputs");
  Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(N, freq.cols());
  padded.topRows(M) = freq;
  return dct_matrix(N).transpose() * padded;
}

}  // namespace symreg
