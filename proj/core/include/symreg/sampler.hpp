#pragma once

#include <cstdint>
#include <vector>

#include "symreg/model.hpp"
#include "symreg/rng.hpp"
#include "symreg/trajectory.hpp"

namespace symreg {

struct SampleConfig {
  int batch = 1000;           // B, expressions returned
  double oversampling = 2.0;  // gamma, >= 1
  int max_nodes = 32;         // nu, hard cap on tree size
  int threads = 1;

  // Constraint rules, individually toggleable.
  bool rule_min_size = true;       // no bare constant / literal one at the root
  bool rule_no_self_unary = true;  // a unary token may not be its own child
  bool rule_no_inverse_pair = true;    // log-exp / square-sqrt chains
  bool rule_no_const_children = true;  // an operator's children can't all be constants

  void validate() const;
};

// Everything the masking rules may look at for one open slot.
struct MaskContext {
  int parent_token = -1;   // -1 at the root
  int sibling_token = -1;  // filled left sibling of a right slot, else -1
  int depth = 1;
  int node_count = 0;      // nodes placed so far
  int open_slots = 1;      // includes the slot being filled
  int max_nodes = 32;
};

// Bitmap of legal tokens for the slot; bit i = token i allowed. The node
// budget rule always applies: a token is legal only if the tree can still
// close within max_nodes. Throws UsageError naming the node if nothing
// remains legal.
std::uint64_t legal_token_mask(const TokenLibrary& lib, const SampleConfig& cfg,
                               const MaskContext& ctx);

// Masked tokens get probability zero (logit -inf).
Eigen::VectorXd apply_mask(const Eigen::VectorXd& logits, std::uint64_t mask);

// Draws an index from a masked log-probability vector.
int sample_categorical(const Eigen::VectorXd& log_probs, Rng& rng);

// Grows ceil(gamma * B) trees in BFS lockstep (one batched prediction per
// generation step), then returns the first B unique ones; duplicates are
// admitted only when fewer than B unique trees exist. Deterministic given
// (theta, cfg, seed) for any thread count.
std::vector<Trajectory> sample_batch(const Model& model, const TokenLibrary& lib,
                                     const Eigen::VectorXd& theta,
                                     const SampleConfig& cfg, std::uint64_t seed);

// Per-token log-probabilities of a stored trajectory under the given
// parameters, replaying the stored masks. Throws ContractViolation if a
// stored token is masked out.
struct LogProbResult {
  double total = 0.0;
  Eigen::VectorXd per_token;
};
LogProbResult log_prob(const Model& model, const TokenLibrary& lib,
                       const Trajectory& traj, const Eigen::VectorXd& theta);

}  // namespace symreg
