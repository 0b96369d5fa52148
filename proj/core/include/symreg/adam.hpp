#pragma once

#include <Eigen/Core>

namespace symreg {

struct AdamState {
  Eigen::VectorXd m, v;
  long step_count = 0;
  long skipped = 0;  // non-finite gradients seen
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam descent step with bias correction. A non-finite gradient
// skips the update and bumps the skip counter.
inline void adam_step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad,
                      AdamState& st, double lr) {
  if (st.m.size() != theta.size()) {
    st.m = Eigen::VectorXd::Zero(theta.size());
    st.v = Eigen::VectorXd::Zero(theta.size());
  }
  if (!grad.allFinite()) {
    ++st.skipped;
    return;
  }
  ++st.step_count;
  st.m = st.beta1 * st.m + (1.0 - st.beta1) * grad;
  st.v = st.beta2 * st.v + (1.0 - st.beta2) * grad.cwiseProduct(grad);
  double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step_count));
  double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step_count));
  theta.array() -= lr * (st.m.array() / bc1) /
                   ((st.v.array() / bc2).sqrt() + st.eps);
}

}  // namespace symreg
