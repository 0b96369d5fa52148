#include "symreg/levmar.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace symreg {

void LMConfig::validate() const {
  if (max_iterations < 1 || !(initial_damping > 0.0) || !(damping_increase > 1.0) ||
      !(damping_decrease > 1.0) || !(residual_tol > 0.0) || !(param_tol > 0.0))
    throw UsageError("levmar: all configuration values must be positive");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// SSE of y - f(x; c); +inf when any row poisons.
double sse_at(const TokenLibrary& lib, Expression& expr, const Eigen::MatrixXd& X,
              const Eigen::VectorXd& y, const Eigen::VectorXd& c,
              Eigen::VectorXd* residual_out = nullptr) {
  for (int i = 0; i < c.size(); ++i) expr.constants[i] = c[i];
  EvalResult r = evaluate(lib, expr, X);
  if (!r.valid) return kInf;
  Eigen::VectorXd residual = y - r.values;
  if (residual_out) *residual_out = residual;
  return residual.squaredNorm();
}

}  // namespace

LMResult fit_constants(const TokenLibrary& lib, const Expression& expr,
                       const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const LMConfig& cfg) {
  cfg.validate();
  if (!expr.tree.complete) throw UsageError("fit_constants: incomplete expression");
  const int nc = count_constants(lib, expr.tree);

  LMResult result;
  if (nc == 0) {
    result.constants = expr.constants;
    EvalResult r = evaluate(lib, expr, X);
    result.poisoned = !r.valid;
    result.sse = r.valid ? (y - r.values).squaredNorm() : kInf;
    return result;
  }

  Expression work = expr;
  work.constants.assign(nc, cfg.initial_value);
  Eigen::VectorXd c = Eigen::VectorXd::Constant(nc, cfg.initial_value);

  Eigen::VectorXd residual;
  double sse = sse_at(lib, work, X, y, c, &residual);
  if (!std::isfinite(sse)) {
    result.constants.assign(nc, cfg.initial_value);
    result.sse = kInf;
    result.poisoned = true;
    return result;
  }

  double mu = cfg.initial_damping;
  const Eigen::Index S = y.size();
  Eigen::MatrixXd J(S, nc);  // d f / d c

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    result.iterations = iter + 1;
    bool jacobian_ok = true;
    for (int j = 0; j < nc; ++j) {
      double h = 1e-6 * (1.0 + std::abs(c[j]));
      Eigen::VectorXd cp = c, cm = c;
      cp[j] += h;
      cm[j] -= h;
      for (int i = 0; i < nc; ++i) work.constants[i] = cp[i];
      EvalResult up = evaluate(lib, work, X);
      for (int i = 0; i < nc; ++i) work.constants[i] = cm[i];
      EvalResult dn = evaluate(lib, work, X);
      if (!up.valid || !dn.valid) {
        jacobian_ok = false;
        break;
      }
      J.col(j) = (up.values - dn.values) / (2.0 * h);
    }
    if (!jacobian_ok) break;

    Eigen::MatrixXd JtJ = J.transpose() * J;
    Eigen::VectorXd Jtr = J.transpose() * residual;

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal().array() += mu;
      Eigen::VectorXd delta = A.ldlt().solve(Jtr);
      if (!delta.allFinite()) {
        mu *= cfg.damping_increase;
        if (mu > 1e30) break;
        continue;
      }
      Eigen::VectorXd c_trial = c + delta;
      Eigen::VectorXd r_trial;
      double sse_trial = sse_at(lib, work, X, y, c_trial, &r_trial);
      if (std::isfinite(sse_trial) && sse_trial < sse) {
        double improvement = sse - sse_trial;
        double step = delta.norm();
        c = c_trial;
        residual = r_trial;
        sse = sse_trial;
        mu /= cfg.damping_decrease;
        accepted = true;
        if (improvement <= cfg.residual_tol * (1.0 + sse) ||
            step <= cfg.param_tol * (1.0 + c.norm())) {
          result.constants.assign(c.data(), c.data() + nc);
          result.sse = sse;
          return result;
        }
      } else {
        mu *= cfg.damping_increase;
        if (mu > 1e30) break;  // stuck; give up on this iteration
      }
    }
    if (!accepted) break;
  }

  result.constants.assign(c.data(), c.data() + nc);
  result.sse = sse;
  return result;
}

}  // namespace symreg
