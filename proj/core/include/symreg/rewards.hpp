#pragma once

#include <Eigen/Core>
#include <vector>

#include "symreg/eval.hpp"

namespace symreg {

// Per-expression reward bookkeeping for one epoch. Orientation throughout:
// higher raw_reward is better; poisoned expressions carry -inf.
struct RewardRecord {
  int index = -1;
  double raw_reward = 0.0;
  int rank = 0;        // count of strictly better rewards; 0 = best, ties share
  double weight = 0.0; // mapped f, >= 0
  bool valid = true;
};

// 1 / (1 + NRMSE) where NRMSE = RMSE / sigma_y. In (0, 1]; 1 at a perfect fit.
double nrmse_reward(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat,
                    double sigma_y);

// Negated Bayesian information criterion: 2 * sum_i log N(y_i | f(x_i), sigma2)
// - k * log(S), with k = node count + constant-token count. Higher is better;
// -inf when evaluation poisons. sigma2 is the (fixed) population variance of
// the training outputs.
double bic_reward(const TokenLibrary& lib, const Expression& expr,
                  const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  double sigma2);

// eta^n / (1 + RMSE) with n = number of multiplication tokens. 0 when poisoned.
double spl_reward(const TokenLibrary& lib, const Expression& expr,
                  const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double eta);

// 1 / (1 + NMSE) + lambda_t * exp(-l / L) with l = token count and NMSE the
// mean squared error over the variance of y. 0 when poisoned.
double tpsr_reward(const TokenLibrary& lib, const Expression& expr,
                   const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   double lambda_t, int max_tokens);

// Step-wise ranking weights: f_i = lambda * max(0, 1 - c_i / (alpha*B/100))
// where c_i counts rewards strictly greater than reward i (ties share the
// count). Every reward ranked inside the top alpha% maps to a strictly
// positive weight; everything else maps to zero. NaN inputs are treated as
// -inf (poisoned). Depends only on the ordering of the rewards.
std::vector<double> rank_map(const std::vector<double>& rewards, double alpha,
                             double lambda);

// Same weights, but the top-percent budget is alpha * base_batch / 100
// regardless of rewards.size(). Used when a batch is merged with replay
// trajectories.
std::vector<double> rank_map_with_base(const std::vector<double>& rewards,
                                       double alpha, double lambda,
                                       int base_batch);

// Strictly-greater counts (the c_i above).
std::vector<int> strict_rank_counts(const std::vector<double>& rewards);

}  // namespace symreg
