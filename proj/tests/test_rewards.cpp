#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "symreg/infix.hpp"

using namespace symreg;
using namespace testutil;

TEST_SUITE_BEGIN("rewards");

TEST_CASE("nrmse reward") {
  Eigen::VectorXd y(2), zero(2), same(2);
  y << 0.0, 2.0;
  zero << 0.0, 0.0;
  same = y;
  CHECK(nrmse_reward(y, same, 1.0) == 1.0);
  // RMSE = sqrt(2), sigma_y = 1
  CHECK(nrmse_reward(y, zero, 1.0) ==
        doctest::Approx(1.0 / (1.0 + std::sqrt(2.0))).epsilon(1e-12));
  CHECK(nrmse_reward(y, zero, 1.0) == doctest::Approx(0.4142).epsilon(1e-3));
  // NRMSE = 1 gives exactly 1/2
  Eigen::VectorXd off(2);
  off << 1.0, 3.0;
  CHECK(nrmse_reward(y, off, 1.0) == 0.5);
  CHECK_THROWS_AS(nrmse_reward(y, zero, 0.0), UsageError);
}

TEST_CASE("bic reward against a per-point Gaussian log-density oracle") {
  TokenLibrary lib = tiny_lib();

  // S=2, exact fit, k=1: reward = -(log 2 + 2 log 2pi)
  Expression x1 = parse_infix("x1", lib);
  Eigen::MatrixXd X(2, 1);
  X << 0.0, 2.0;
  Eigen::VectorXd y(2);
  y << 0.0, 2.0;
  double reward = bic_reward(lib, x1, X, y, 1.0);
  double expected = -(std::log(2.0) + 2.0 * std::log(2.0 * M_PI));
  CHECK(reward == doctest::Approx(expected).epsilon(1e-12));
  CHECK(reward == doctest::Approx(-4.3689).epsilon(1e-4));

  // decomposition oracle on random data, sigma2 != 1
  Rng rng(5);
  Eigen::MatrixXd Xr(16, 1);
  Eigen::VectorXd yr(16);
  for (int i = 0; i < 16; ++i) {
    Xr(i, 0) = rng.next_normal();
    yr[i] = rng.next_normal();
  }
  Expression e = parse_infix("sin(x1)*c + 1", lib);
  e.constants[0] = 1.7;
  double sigma2 = 2.3;
  EvalResult ev = evaluate(lib, e, Xr);
  REQUIRE(ev.valid);
  double oracle = 0.0;
  for (int i = 0; i < 16; ++i) {
    double d = yr[i] - ev.values[i];
    oracle += -0.5 * std::log(2.0 * M_PI * sigma2) - 0.5 * d * d / sigma2;
  }
  double k = complexity(lib, e);
  CHECK(bic_reward(lib, e, Xr, yr, sigma2) ==
        doctest::Approx(2.0 * oracle - k * std::log(16.0)).epsilon(1e-12));

  // one extra node at identical predictions costs exactly log S
  Expression base = parse_infix("x1", lib);
  Expression padded = parse_infix("x1*1", lib);  // 3 nodes, same values
  double diff = bic_reward(lib, base, Xr, yr, sigma2) -
                bic_reward(lib, padded, Xr, yr, sigma2);
  CHECK(diff == doctest::Approx(2.0 * std::log(16.0)).epsilon(1e-12));

  // halving residuals at fixed k strictly increases the reward
  Eigen::VectorXd y_near = ev.values + 0.5 * (yr - ev.values);
  CHECK(bic_reward(lib, e, Xr, y_near, sigma2) > bic_reward(lib, e, Xr, yr, sigma2));

  // poisoned evaluation pins the reward at -inf
  TokenLibrary lib2 = TokenLibrary::build(1, {"log"}, {"add"}, true, true);
  Expression bad = parse_infix("log(x1)", lib2);
  Eigen::MatrixXd Xn(2, 1);
  Xn << -1.0, 1.0;
  CHECK(bic_reward(lib2, bad, Xn, y, 1.0) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("spl reward") {
  TokenLibrary lib = tiny_lib();
  Eigen::MatrixXd X(8, 1);
  for (int i = 0; i < 8; ++i) X(i, 0) = 0.25 * (i + 1);

  // perfect fit with two multiplications
  Expression two_mul = parse_infix("x1*x1*x1", lib);
  Eigen::VectorXd y = evaluate(lib, two_mul, X).values;
  CHECK(spl_reward(lib, two_mul, X, y, 0.99) == doctest::Approx(0.9801).epsilon(1e-12));
  // eta = 1 reduces to 1 / (1 + RMSE)
  Eigen::VectorXd y_off = y.array() + 1.0;
  CHECK(spl_reward(lib, two_mul, X, y_off, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  // no multiplications, perfect fit
  Expression plain = parse_infix("x1 + x1", lib);
  Eigen::VectorXd y2 = evaluate(lib, plain, X).values;
  CHECK(spl_reward(lib, plain, X, y2, 0.9) == 1.0);
}

TEST_CASE("tpsr reward") {
  TokenLibrary lib = tiny_lib();
  Eigen::MatrixXd X(8, 1);
  for (int i = 0; i < 8; ++i) X(i, 0) = 0.3 * i - 1.0;
  Expression e = parse_infix("x1*x1 + x1", lib);  // 5 tokens
  Eigen::VectorXd y = evaluate(lib, e, X).values;

  CHECK(tpsr_reward(lib, e, X, y, 0.1, 5) ==
        doctest::Approx(1.0 + 0.1 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(tpsr_reward(lib, e, X, y, 0.1, 5) == doctest::Approx(1.0368).epsilon(1e-3));
  CHECK(tpsr_reward(lib, e, X, y, 0.0, 5) == 1.0);

  // longer expression at equal fit scores strictly lower
  Expression longer = parse_infix("x1*x1 + x1 + x1*0.0", lib);
  Eigen::VectorXd y_same = evaluate(lib, longer, X).values;
  CHECK((y_same - y).cwiseAbs().maxCoeff() == 0.0);
  CHECK(tpsr_reward(lib, longer, X, y, 0.1, 16) < tpsr_reward(lib, e, X, y, 0.1, 16));
}

TEST_CASE("rank map examples") {
  std::vector<double> w = rank_map({5, 4, 3, 2, 1}, 40.0, 1.0);
  CHECK(w == std::vector<double>{1.0, 0.5, 0.0, 0.0, 0.0});

  std::vector<double> all_equal = rank_map({7, 7, 7}, 50.0, 0.3);
  CHECK(all_equal == std::vector<double>{0.3, 0.3, 0.3});

  std::vector<double> ties = rank_map({9, 9, 1, 1}, 50.0, 1.0);
  CHECK(ties == std::vector<double>{1.0, 1.0, 0.0, 0.0});
}

TEST_CASE("rank map properties") {
  Rng rng(1234);
  for (int trial = 0; trial < 500; ++trial) {
    int B = 1 + static_cast<int>(rng.next_u64() % 40);
    double alpha = 1.0 + 99.0 * rng.next_double();
    std::vector<double> rewards(B);
    for (double& r : rewards) {
      double u = rng.next_double();
      if (u < 0.1)
        r = -std::numeric_limits<double>::infinity();
      else if (u < 0.15)
        r = std::numeric_limits<double>::infinity();
      else if (u < 0.3)
        r = std::round(rng.next_normal() * 2.0);  // force duplicates
      else
        r = rng.next_normal() * 10.0;
    }
    std::vector<double> w = rank_map(rewards, alpha, 0.2);

    // invariance under a strictly increasing transform (order-only dependence)
    std::vector<double> transformed(rewards);
    for (double& r : transformed) r = std::atan(r) * 3.0 + 1.0;  // monotone
    CHECK(rank_map(transformed, alpha, 0.2) == w);

    // weights non-increasing in rank and positive exactly inside the budget
    std::vector<int> counts = strict_rank_counts(rewards);
    double budget = alpha * B / 100.0;
    double max_w = 0.0;
    for (int i = 0; i < B; ++i) {
      max_w = std::max(max_w, w[i]);
      CHECK((w[i] > 0.0) == (counts[i] < budget));
      for (int j = 0; j < B; ++j)
        if (counts[i] < counts[j]) CHECK(w[i] >= w[j]);
    }
    CHECK(max_w > 0.0);  // never all zero
  }
}

TEST_SUITE_END();
