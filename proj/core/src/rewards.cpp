#include "symreg/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace symreg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;

double rmse(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat) {
  return std::sqrt((y - y_hat).squaredNorm() / y.size());
}

}  // namespace

double nrmse_reward(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat,
                    double sigma_y) {
  if (y.size() != y_hat.size()) throw UsageError("nrmse_reward: length mismatch");
  if (y.size() == 0) throw UsageError("nrmse_reward: empty targets");
  if (!(sigma_y > 0.0)) throw UsageError("nrmse_reward: degenerate target (sigma_y == 0)");
  return 1.0 / (1.0 + rmse(y, y_hat) / sigma_y);
}

double bic_reward(const TokenLibrary& lib, const Expression& expr,
                  const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  double sigma2) {
  const Eigen::Index S = y.size();
  if (S < 2) throw UsageError("bic_reward: need at least two samples");
  if (!(sigma2 > 0.0)) throw UsageError("bic_reward: sigma2 must be positive");
  EvalResult r = evaluate(lib, expr, X);
  if (!r.valid) return kNegInf;
  const int k = complexity(lib, expr);
  // 2 * Gaussian log-likelihood - k log S
  double sse = (y - r.values).squaredNorm();
  double loglik = -0.5 * S * (kLog2Pi + std::log(sigma2)) - 0.5 * sse / sigma2;
  return 2.0 * loglik - k * std::log(static_cast<double>(S));
}

double spl_reward(const TokenLibrary& lib, const Expression& expr,
                  const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double eta) {
  if (!(eta > 0.0) || eta > 1.0) throw UsageError("spl_reward: eta must be in (0, 1]");
  EvalResult r = evaluate(lib, expr, X);
  if (!r.valid) return 0.0;
  int n_mul = 0;
  for (const ExprNode& node : expr.tree.nodes)
    if (lib[node.token_id].op == OpCode::Mul) ++n_mul;
  return std::pow(eta, n_mul) / (1.0 + rmse(y, r.values));
}

double tpsr_reward(const TokenLibrary& lib, const Expression& expr,
                   const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   double lambda_t, int max_tokens) {
  if (max_tokens < 1) throw UsageError("tpsr_reward: max_tokens must be >= 1");
  EvalResult r = evaluate(lib, expr, X);
  if (!r.valid) return 0.0;
  double var = (y.array() - y.mean()).square().mean();
  double mse = (y - r.values).squaredNorm() / y.size();
  double nmse = var > 0.0 ? mse / var : mse;
  double l = expr.tree.node_count();
  return 1.0 / (1.0 + nmse) + lambda_t * std::exp(-l / max_tokens);
}

std::vector<int> strict_rank_counts(const std::vector<double>& rewards) {
  const int n = static_cast<int>(rewards.size());
  std::vector<double> clean(rewards);
  for (double& v : clean)
    if (std::isnan(v)) v = kNegInf;
  // Sort descending once; c_i = number of values strictly greater, so tied
  // values share the index of their first occurrence.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (clean[a] != clean[b]) return clean[a] > clean[b];
    return a < b;
  });
  std::vector<int> counts(n, 0);
  int first_of_tie = 0;
  for (int pos = 0; pos < n; ++pos) {
    if (pos > 0 && clean[order[pos]] != clean[order[pos - 1]]) first_of_tie = pos;
    counts[order[pos]] = first_of_tie;
  }
  return counts;
}

std::vector<double> rank_map_with_base(const std::vector<double>& rewards,
                                       double alpha, double lambda,
                                       int base_batch) {
  if (rewards.empty()) return {};
  if (!(alpha > 0.0) || alpha > 100.0)
    throw UsageError("rank_map: alpha must be in (0, 100]");
  if (!(lambda > 0.0)) throw UsageError("rank_map: lambda must be positive");
  if (base_batch < 1) throw UsageError("rank_map: batch must be positive");
  const double budget = alpha * base_batch / 100.0;
  std::vector<int> counts = strict_rank_counts(rewards);
  std::vector<double> weights(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i)
    weights[i] = lambda * std::max(0.0, 1.0 - counts[i] / budget);
  return weights;
}

std::vector<double> rank_map(const std::vector<double>& rewards, double alpha,
                             double lambda) {
  return rank_map_with_base(rewards, alpha, lambda,
                            static_cast<int>(rewards.size()));
}

}  // namespace symreg
