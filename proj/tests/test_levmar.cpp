#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "helpers.hpp"
#include "symreg/infix.hpp"

using namespace symreg;
using namespace testutil;

TEST_SUITE_BEGIN("constopt");

TEST_CASE("linear problem is solved to the oracle") {
  TokenLibrary lib = tiny_lib();
  Expression cx = parse_infix("c*x1", lib);
  Eigen::MatrixXd X(2, 1);
  X << 1.0, 2.0;
  Eigen::VectorXd y(2);
  y << 2.5, 5.0;
  LMResult fit = fit_constants(lib, cx, X, y, LMConfig{});
  CHECK_FALSE(fit.poisoned);
  CHECK(std::abs(fit.constants[0] - 2.5) < 1e-10);
  CHECK(fit.sse < 1e-18);
}

TEST_CASE("no constants returns the expression untouched") {
  TokenLibrary lib = tiny_lib();
  Expression e = parse_infix("x1 + sin(x1)", lib);
  Eigen::MatrixXd X(4, 1);
  X << 0.0, 0.5, 1.0, 1.5;
  Eigen::VectorXd y = evaluate(lib, e, X).values;
  y[0] += 0.25;
  LMResult fit = fit_constants(lib, e, X, y, LMConfig{});
  CHECK(fit.constants.empty());
  CHECK(fit.sse == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(fit.iterations == 0);
}

TEST_CASE("multi-constant linear model matches normal equations to 1e-8") {
  TokenLibrary lib = TokenLibrary::build(1, {"sin"}, {"add", "mul"}, true, true);
  // c1*x + c2*sin(x) + c3
  Expression e = parse_infix("c*x1 + c*sin(x1) + c", lib);
  Rng rng(88);
  const int S = 40;
  Eigen::MatrixXd X(S, 1);
  Eigen::VectorXd y(S);
  for (int i = 0; i < S; ++i) {
    X(i, 0) = 4.0 * rng.next_double() - 2.0;
    y[i] = 1.3 * X(i, 0) - 0.7 * std::sin(X(i, 0)) + 0.4 + 0.01 * rng.next_normal();
  }
  Eigen::MatrixXd A(S, 3);
  A.col(0) = X.col(0);
  A.col(1) = X.col(0).array().sin();
  A.col(2).setOnes();
  Eigen::VectorXd oracle = (A.transpose() * A).ldlt().solve(A.transpose() * y);

  LMResult fit = fit_constants(lib, e, X, y, LMConfig{});
  REQUIRE(fit.constants.size() == 3);
  // BFS constant order: the trailing addend's c comes first (shallowest level)
  CHECK(std::abs(fit.constants[0] - oracle[2]) < 1e-8);
  CHECK(std::abs(fit.constants[1] - oracle[0]) < 1e-8);
  CHECK(std::abs(fit.constants[2] - oracle[1]) < 1e-8);
}

TEST_CASE("c1*sin(c2*x) recovered from init (1,1), against a grid-refine oracle") {
  TokenLibrary lib = tiny_lib();
  Expression e = parse_infix("c*sin(c*x1)", lib);
  const int S = 50;
  Eigen::MatrixXd X(S, 1);
  for (int i = 0; i < S; ++i) X(i, 0) = static_cast<double>(i) / (S - 1);
  Eigen::VectorXd y(S);
  for (int i = 0; i < S; ++i) y[i] = 2.0 * std::sin(3.0 * X(i, 0));

  // brute-force grid, then local refinement
  auto sse_of = [&](double c1, double c2) {
    double s = 0.0;
    for (int i = 0; i < S; ++i) {
      double d = y[i] - c1 * std::sin(c2 * X(i, 0));
      s += d * d;
    }
    return s;
  };
  double best_c1 = 0, best_c2 = 0, best = 1e300;
  for (double c1 = 0.5; c1 <= 4.0; c1 += 0.05)
    for (double c2 = 0.5; c2 <= 5.0; c2 += 0.05)
      if (double s = sse_of(c1, c2); s < best) {
        best = s;
        best_c1 = c1;
        best_c2 = c2;
      }
  for (double step = 0.025; step > 1e-7; step *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (auto [d1, d2] : {std::pair{step, 0.0}, {-step, 0.0}, {0.0, step}, {0.0, -step}}) {
        if (double s = sse_of(best_c1 + d1, best_c2 + d2); s < best) {
          best = s;
          best_c1 += d1;
          best_c2 += d2;
          moved = true;
        }
      }
    }
  }
  CHECK(std::abs(best_c1 - 2.0) < 1e-4);
  CHECK(std::abs(best_c2 - 3.0) < 1e-4);

  LMResult fit = fit_constants(lib, e, X, y, LMConfig{});
  REQUIRE(fit.constants.size() == 2);
  CHECK(std::abs(fit.constants[0] - best_c1) < 1e-3);
  CHECK(std::abs(fit.constants[1] - best_c2) < 1e-3);
}

TEST_CASE("determinism and poisoned starts") {
  TokenLibrary lib =
      TokenLibrary::build(1, {"log", "sin"}, {"add", "sub", "mul"}, true, true);
  Expression e = parse_infix("c*sin(x1) + c", lib);
  Rng rng(3);
  Eigen::MatrixXd X(20, 1);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) {
    X(i, 0) = rng.next_normal();
    y[i] = 0.8 * std::sin(X(i, 0)) - 0.2;
  }
  LMResult a = fit_constants(lib, e, X, y, LMConfig{});
  LMResult b = fit_constants(lib, e, X, y, LMConfig{});
  REQUIRE(a.constants.size() == b.constants.size());
  for (std::size_t i = 0; i < a.constants.size(); ++i)
    CHECK(a.constants[i] == b.constants[i]);  // bitwise

  // log of a negative constant poisons every iteration
  Expression bad = parse_infix("log(0 - c)", lib);
  Eigen::MatrixXd X1(3, 1);
  X1 << 1.0, 2.0, 3.0;
  Eigen::VectorXd y1(3);
  y1 << 1.0, 1.0, 1.0;
  LMResult p = fit_constants(lib, bad, X1, y1, LMConfig{});
  CHECK(p.poisoned);
}

TEST_SUITE_END();
