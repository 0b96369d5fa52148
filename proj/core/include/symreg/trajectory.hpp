#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "symreg/expr.hpp"

namespace symreg {

// One sampled expression with everything needed to re-score it later:
// the BFS token sequence, the per-step legal-token bitmaps that were applied
// at sampling time, and the per-step log-probabilities under the sampling
// parameters. Replaying the stored masks against the same parameters
// reproduces step_logprob bitwise.
struct Trajectory {
  ExprTree tree;
  std::vector<int> tokens;              // BFS order
  std::vector<std::uint64_t> masks;     // bit i set = token i was legal
  Eigen::VectorXd step_logprob;         // chosen-token log prob per step

  int length() const { return static_cast<int>(tokens.size()); }
};

}  // namespace symreg
