#include "symreg/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "symreg/threading.hpp"

namespace symreg {

void SampleConfig::validate() const {
  if (batch < 1) throw UsageError("sampler: batch must be positive");
  if (oversampling < 1.0) throw UsageError("sampler: oversampling must be >= 1");
  if (max_nodes < 1) throw UsageError("sampler: max_nodes must be positive");
}

namespace {

bool inverse_pair(OpCode a, OpCode b) {
  return (a == OpCode::Log && b == OpCode::Exp) ||
         (a == OpCode::Exp && b == OpCode::Log) ||
         (a == OpCode::Square && b == OpCode::Sqrt) ||
         (a == OpCode::Sqrt && b == OpCode::Square);
}

}  // namespace

std::uint64_t legal_token_mask(const TokenLibrary& lib, const SampleConfig& cfg,
                               const MaskContext& ctx) {
  const Token* parent = ctx.parent_token >= 0 ? &lib[ctx.parent_token] : nullptr;
  const Token* sibling = ctx.sibling_token >= 0 ? &lib[ctx.sibling_token] : nullptr;
  std::uint64_t mask = 0;
  for (int i = 0; i < lib.size(); ++i) {
    const Token& t = lib[i];
    // Closing rule: after placing this token the tree must still fit the
    // node budget (placed + open slots after this fill, all filled minimally).
    if (ctx.node_count + ctx.open_slots + t.arity > ctx.max_nodes) continue;
    if (cfg.rule_min_size && !parent && is_constant_kind(t.kind)) continue;
    if (parent && parent->kind == TokenKind::Unary) {
      if (cfg.rule_no_self_unary && t.id == parent->id) continue;
      if (cfg.rule_no_inverse_pair && t.kind == TokenKind::Unary &&
          inverse_pair(parent->op, t.op))
        continue;
      if (cfg.rule_no_const_children && is_constant_kind(t.kind)) continue;
    }
    if (parent && parent->kind == TokenKind::Binary && cfg.rule_no_const_children &&
        sibling && is_constant_kind(sibling->kind) && is_constant_kind(t.kind))
      continue;
    mask |= std::uint64_t(1) << i;
  }
  if (mask == 0)
    throw UsageError("mask rules leave no legal token for the slot at depth " +
                     std::to_string(ctx.depth) + " (node " +
                     std::to_string(ctx.node_count) + ")");
  return mask;
}

Eigen::VectorXd apply_mask(const Eigen::VectorXd& logits, std::uint64_t mask) {
  Eigen::VectorXd out = logits;
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < logits.size(); ++i)
    if (!((mask >> i) & 1u)) out[i] = neg_inf;
  return out;
}

int sample_categorical(const Eigen::VectorXd& log_probs, Rng& rng) {
  double u = rng.next_double();
  double acc = 0.0;
  int last_legal = -1;
  for (int i = 0; i < log_probs.size(); ++i) {
    if (std::isinf(log_probs[i])) continue;
    last_legal = i;
    acc += std::exp(log_probs[i]);
    if (u < acc) return i;
  }
  if (last_legal < 0) throw UsageError("sample_categorical: no legal outcome");
  return last_legal;  // u landed in the roundoff tail
}

namespace {

struct GrowState {
  BfsBuilder builder;
  Trajectory traj;
  Rng rng;
  std::vector<double> logprobs;  // grows per step; packed into traj at the end

  GrowState(const TokenLibrary& lib, std::uint64_t seed)
      : builder(lib), rng(seed) {}
};

}  // namespace

std::vector<Trajectory> sample_batch(const Model& model, const TokenLibrary& lib,
                                     const Eigen::VectorXd& theta,
                                     const SampleConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (lib.size() > 64) throw UsageError("sampler: vocab above 64 is unsupported");
  const int grown = static_cast<int>(std::ceil(cfg.oversampling * cfg.batch));

  std::vector<GrowState> states;
  states.reserve(grown);
  for (int g = 0; g < grown; ++g)
    states.emplace_back(lib, Rng::derive(seed, static_cast<std::uint64_t>(g)));

  // One lockstep pass per generation step; every incomplete tree predicts and
  // samples its next BFS slot. max_nodes passes suffice: each adds one node
  // per incomplete tree and the budget mask forces closure.
  for (int step = 0; step < cfg.max_nodes; ++step) {
    bool any_open = false;
    for (const GrowState& s : states)
      if (!s.builder.complete()) {
        any_open = true;
        break;
      }
    if (!any_open) break;
    parallel_for(states.size(), cfg.threads, [&](std::size_t g) {
      GrowState& s = states[g];
      if (s.builder.complete()) return;
      MaskContext mctx;
      mctx.parent_token = s.builder.parent_token();
      mctx.sibling_token = s.builder.sibling_token();
      mctx.depth = s.builder.next_depth();
      mctx.node_count = s.builder.node_count();
      mctx.open_slots = s.builder.started() ? s.builder.open_slots() : 1;
      mctx.max_nodes = cfg.max_nodes;
      std::uint64_t mask = legal_token_mask(lib, cfg, mctx);
      Eigen::VectorXd logits = predict_next(model, lib, s.builder, theta, 0);
      Eigen::VectorXd lp = masked_log_softmax(apply_mask(logits, mask), mask);
      int token = sample_categorical(lp, s.rng);
      s.traj.tokens.push_back(token);
      s.traj.masks.push_back(mask);
      s.logprobs.push_back(lp[token]);
      s.builder.push(token);
    });
  }

  // First B unique trees (by token sequence); duplicates fill the remainder
  // only when the unique pool is too small.
  std::vector<Trajectory> out;
  out.reserve(cfg.batch);
  std::map<std::vector<int>, int> seen;
  std::vector<int> duplicates;
  for (int g = 0; g < grown && static_cast<int>(out.size()) < cfg.batch; ++g) {
    GrowState& s = states[g];
    if (!s.builder.complete())
      throw UsageError("sampler: tree failed to close within the node budget");
    auto [it, inserted] = seen.emplace(s.traj.tokens, g);
    if (!inserted) {
      duplicates.push_back(g);
      continue;
    }
    s.traj.tree = s.builder.take();
    s.traj.step_logprob =
        Eigen::Map<const Eigen::VectorXd>(s.logprobs.data(), s.logprobs.size());
    out.push_back(std::move(s.traj));
  }
  for (std::size_t d = 0; d < duplicates.size() && static_cast<int>(out.size()) < cfg.batch; ++d) {
    GrowState& s = states[duplicates[d]];
    s.traj.tree = s.builder.take();
    s.traj.step_logprob =
        Eigen::Map<const Eigen::VectorXd>(s.logprobs.data(), s.logprobs.size());
    out.push_back(std::move(s.traj));
  }
  return out;
}

LogProbResult log_prob(const Model& model, const TokenLibrary& lib,
                       const Trajectory& traj, const Eigen::VectorXd& theta) {
  const int n = traj.length();
  if (static_cast<int>(traj.masks.size()) != n)
    throw UsageError("log_prob: trajectory masks and tokens differ in length");
  LogProbResult res;
  res.per_token.resize(n);
  for (int j = 0; j < n; ++j) {
    std::vector<NodeContext> ctx = step_context(lib, traj.tokens, j);
    Eigen::VectorXd logits = model.forward(ctx, theta);
    std::uint64_t mask = traj.masks[j];
    int chosen = traj.tokens[j];
    if (!((mask >> chosen) & 1u))
      throw ContractViolation("log_prob: stored token " + std::to_string(chosen) +
                              " is masked out at step " + std::to_string(j));
    Eigen::VectorXd lp = masked_log_softmax(apply_mask(logits, mask), mask);
    res.per_token[j] = lp[chosen];
  }
  res.total = res.per_token.sum();
  return res;
}

}  // namespace symreg
