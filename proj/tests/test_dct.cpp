#include <doctest.h>

#include "symreg/dct.hpp"
#include "symreg/rng.hpp"

#include <Eigen/Dense>

using namespace symreg;

namespace {
Eigen::MatrixXd random_matrix(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd H(rows, cols);
  for (int i = 0; i < H.size(); ++i) H.data()[i] = rng.next_normal();
  return H;
}
}  // namespace

TEST_SUITE_BEGIN("dct");

TEST_CASE("single-point transform is the identity") {
  Eigen::MatrixXd H = Eigen::MatrixXd::Constant(1, 3, 2.5);
  Eigen::MatrixXd F = dct_forward(H);
  CHECK(dct_matrix(1)(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK((F - H).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("constant column concentrates in the zero frequency") {
  // N=2, column [a, a] -> [a*sqrt(2), 0]
  Eigen::MatrixXd H(2, 1);
  H << 3.0, 3.0;
  Eigen::MatrixXd F = dct_forward(H);
  CHECK(F(0, 0) == doctest::Approx(3.0 * std::sqrt(2.0)).epsilon(1e-14));
  CHECK(std::abs(F(1, 0)) < 1e-14);
}

TEST_CASE("orthonormality for every N up to 64") {
  for (int N = 1; N <= 64; ++N) {
    Eigen::MatrixXd C = dct_matrix(N);
    double err = (C.transpose() * C - Eigen::MatrixXd::Identity(N, N))
                     .cwiseAbs()
                     .maxCoeff();
    CHECK(err < 1e-12);
  }
}

TEST_CASE("round trip through transform and restore") {
  Rng rng(17);
  Eigen::MatrixXd H = random_matrix(7, 5, rng);
  Eigen::MatrixXd back = idct_restore(dct_forward(H), 7);
  CHECK((back - H).cwiseAbs().maxCoeff() < 1e-12);

  // clip semantics
  Eigen::MatrixXd F = dct_forward(H);
  CHECK(clip_frequencies(F, 8).rows() == 7);  // M > N keeps everything
  CHECK(clip_frequencies(F, 3).rows() == 3);
  CHECK((clip_frequencies(F, 7) - F).cwiseAbs().maxCoeff() == 0.0);

  // zero input restores to zero
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(3, 5);
  CHECK(idct_restore(Z, 7).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("low-pass residual energy equals the energy of dropped rows") {
  Rng rng(23);
  Eigen::MatrixXd H = random_matrix(10, 4, rng);
  Eigen::MatrixXd F = dct_forward(H);
  int M = 6;
  Eigen::MatrixXd low = idct_restore(clip_frequencies(F, M), 10);
  double residual = (H - low).squaredNorm();
  double dropped = F.bottomRows(10 - M).squaredNorm();
  CHECK(residual == doctest::Approx(dropped).epsilon(1e-10));
}

TEST_SUITE_END();
