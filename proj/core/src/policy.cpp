#include "symreg/policy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "symreg/threading.hpp"

namespace symreg {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void PolicyConfig::validate() const {
  if (!(alpha > 0.0) || alpha > 100.0)
    throw UsageError("policy: alpha must be in (0, 100]");
  if (!(lambda > 0.0)) throw UsageError("policy: lambda must be positive");
  if (!(epsilon > 0.0) || epsilon >= 1.0)
    throw UsageError("policy: epsilon must be in (0, 1)");
  if (beta < 0.0) throw UsageError("policy: beta must be non-negative");
  if (steps_per_epoch < 1) throw UsageError("policy: C must be >= 1");
  if (epochs_per_ref < 1) throw UsageError("policy: G must be >= 1");
  if (!(learning_rate > 0.0)) throw UsageError("policy: learning rate must be positive");
  if (epochs < 0) throw UsageError("policy: epochs must be non-negative");
}

FrozenScore score_trajectory(const Model& model, const TokenLibrary& lib,
                             const Trajectory& traj, const Eigen::VectorXd& theta,
                             bool keep_full) {
  const int n = traj.length();
  FrozenScore out;
  out.chosen.resize(n);
  if (keep_full) out.full.resize(n);
  for (int j = 0; j < n; ++j) {
    std::vector<NodeContext> ctx = step_context(lib, traj.tokens, j);
    Eigen::VectorXd logits = model.forward(ctx, theta);
    std::uint64_t mask = traj.masks[j];
    int chosen = traj.tokens[j];
    if (!((mask >> chosen) & 1u))
      throw ContractViolation("score_trajectory: token masked out at step " +
                              std::to_string(j));
    Eigen::VectorXd lp = masked_log_softmax(apply_mask(logits, mask), mask);
    out.chosen[j] = lp[chosen];
    if (keep_full) out.full[j] = std::move(lp);
  }
  return out;
}

ObjectiveResult policy_objective(const Model& model, const TokenLibrary& lib,
                                 std::span<const Trajectory> batch,
                                 const ObjectiveSpec& spec,
                                 const Eigen::VectorXd& theta,
                                 const std::vector<FrozenScore>* old_scores,
                                 const std::vector<FrozenScore>* ref_scores) {
  const int n = static_cast<int>(batch.size());
  if (static_cast<int>(spec.weights.size()) != n)
    throw UsageError("policy_objective: weights length mismatch");
  if (spec.use_ratio && (!old_scores || static_cast<int>(old_scores->size()) != n))
    throw UsageError("policy_objective: ratio form needs old-snapshot scores");
  if (spec.kl_coef != 0.0 && (!ref_scores || static_cast<int>(ref_scores->size()) != n))
    throw UsageError("policy_objective: KL term needs reference scores");

  long total_steps = 0;
  for (const Trajectory& t : batch) total_steps += t.length();
  if (total_steps == 0) {
    ObjectiveResult empty;
    empty.grad = Eigen::VectorXd::Zero(model.param_count());
    return empty;
  }

  struct PerTraj {
    double value = 0.0;
    double kl_sum = 0.0;
    double entropy_sum = 0.0;
    long clip_active = 0;
    long weighted_tokens = 0;
    Eigen::VectorXd grad;
    bool finite = true;
    bool touched = false;
  };
  std::vector<PerTraj> parts(n);

  const double ent_scale = spec.entropy_coef / static_cast<double>(total_steps);

  parallel_for(static_cast<std::size_t>(n), spec.threads, [&](std::size_t i) {
    const Trajectory& traj = batch[i];
    const double w = spec.weights[i];
    const bool need_backward =
        w != 0.0 || spec.kl_coef != 0.0 || spec.entropy_coef != 0.0;
    if (!need_backward) return;

    PerTraj& part = parts[i];
    part.touched = true;
    part.grad = Eigen::VectorXd::Zero(model.param_count());
    StepTrace trace;

    for (int j = 0; j < traj.length(); ++j) {
      std::vector<NodeContext> ctx = step_context(lib, traj.tokens, j);
      Eigen::VectorXd logits = model.forward(ctx, theta, &trace);
      std::uint64_t mask = traj.masks[j];
      int chosen = traj.tokens[j];
      if (!((mask >> chosen) & 1u))
        throw ContractViolation("policy_objective: token masked out at step " +
                                std::to_string(j));
      Eigen::VectorXd lp = masked_log_softmax(apply_mask(logits, mask), mask);
      const int vocab = static_cast<int>(lp.size());

      Eigen::VectorXd p = Eigen::VectorXd::Zero(vocab);
      for (int a = 0; a < vocab; ++a)
        if ((mask >> a) & 1u) p[a] = std::exp(lp[a]);

      Eigen::VectorXd dlogits = Eigen::VectorXd::Zero(vocab);

      if (w != 0.0) {
        if (spec.use_ratio) {
          double g = std::exp(lp[chosen] - (*old_scores)[i].chosen[j]);
          double clipped = std::clamp(g, 1.0 - spec.epsilon, 1.0 + spec.epsilon);
          part.value += w * std::min(g, clipped);
          ++part.weighted_tokens;
          if (g < 1.0 - spec.epsilon || g > 1.0 + spec.epsilon) ++part.clip_active;
          // d min(g, clip(g)) / dtheta = g * dlogp when g <= 1 + eps, else 0
          if (g <= 1.0 + spec.epsilon) {
            double factor = w * g;
            dlogits -= factor * p;
            dlogits[chosen] += factor;
          }
        } else {
          part.value += w * lp[chosen];
          ++part.weighted_tokens;
          dlogits -= w * p;
          dlogits[chosen] += w;
        }
      }

      if (spec.kl_coef != 0.0) {
        const Eigen::VectorXd& lq = (*ref_scores)[i].full[j];
        double kl = 0.0;
        for (int a = 0; a < vocab; ++a)
          if ((mask >> a) & 1u) kl += p[a] * (lp[a] - lq[a]);
        part.kl_sum += kl;
        part.value -= spec.kl_coef * kl;
        for (int a = 0; a < vocab; ++a)
          if ((mask >> a) & 1u)
            dlogits[a] -= spec.kl_coef * p[a] * ((lp[a] - lq[a]) - kl);
      }

      {
        double entropy = 0.0;
        for (int a = 0; a < vocab; ++a)
          if (((mask >> a) & 1u) && p[a] > 0.0) entropy -= p[a] * lp[a];
        part.entropy_sum += entropy;
        if (spec.entropy_coef != 0.0) {
          part.value += ent_scale * entropy;
          for (int a = 0; a < vocab; ++a)
            if (((mask >> a) & 1u) && p[a] > 0.0)
              dlogits[a] -= ent_scale * p[a] * (lp[a] + entropy);
        }
      }

      model.backward(trace, dlogits, part.grad);
    }
    part.finite = part.grad.allFinite() && std::isfinite(part.value);
  });

  ObjectiveResult out;
  out.grad = Eigen::VectorXd::Zero(model.param_count());
  double kl_total = 0.0, entropy_total = 0.0;
  long clip_active = 0, weighted_tokens = 0;
  for (int i = 0; i < n; ++i) {
    const PerTraj& part = parts[i];
    if (!part.touched) continue;
    if (!part.finite) {
      out.finite = false;
      if (out.bad_trajectory < 0) out.bad_trajectory = i;
      continue;
    }
    out.value += part.value;
    out.grad += part.grad;
    kl_total += part.kl_sum;
    entropy_total += part.entropy_sum;
    clip_active += part.clip_active;
    weighted_tokens += part.weighted_tokens;
  }
  out.mean_kl = kl_total / static_cast<double>(total_steps);
  out.mean_entropy = entropy_total / static_cast<double>(total_steps);
  out.clip_active_fraction =
      weighted_tokens > 0
          ? static_cast<double>(clip_active) / static_cast<double>(weighted_tokens)
          : 0.0;
  return out;
}

double risk_quantile(const std::vector<double>& rewards, double alpha) {
  if (rewards.empty()) throw UsageError("risk_quantile: empty rewards");
  const int B = static_cast<int>(rewards.size());
  int k = static_cast<int>(std::ceil(alpha * B / 100.0));
  k = std::clamp(k, 1, B);
  std::vector<double> sorted(rewards);
  for (double& v : sorted)
    if (std::isnan(v)) v = kNegInf;
  std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end(),
                   std::greater<double>());
  return sorted[k - 1];
}

Eigen::VectorXd baseline_risk_grad(const Model& model, const TokenLibrary& lib,
                                   std::span<const Trajectory> batch,
                                   const std::vector<double>& rewards,
                                   const Eigen::VectorXd& theta, double alpha,
                                   int threads) {
  const int B = static_cast<int>(batch.size());
  if (static_cast<int>(rewards.size()) != B)
    throw UsageError("baseline_risk_grad: rewards length mismatch");
  double r_alpha = risk_quantile(rewards, alpha);
  ObjectiveSpec spec;
  spec.threads = threads;
  spec.weights.assign(B, 0.0);
  const double norm = 100.0 / (alpha * B);
  if (std::isfinite(r_alpha)) {
    for (int i = 0; i < B; ++i) {
      double r = std::isnan(rewards[i]) ? kNegInf : rewards[i];
      if (r >= r_alpha) {
        double w = (r - r_alpha) * norm;
        spec.weights[i] = std::isfinite(w) ? w : 0.0;
      }
    }
  }
  ObjectiveResult res =
      policy_objective(model, lib, batch, spec, theta, nullptr, nullptr);
  return res.grad;
}

void ReplayBuffer::offer(Entry entry) {
  // One slot per distinct token sequence; keep the better reward.
  for (Entry& e : entries_) {
    if (e.traj.tokens == entry.traj.tokens) {
      if (entry.reward > e.reward) e = std::move(entry);
      std::sort(entries_.begin(), entries_.end(),
                [](const Entry& a, const Entry& b) { return a.reward > b.reward; });
      return;
    }
  }
  entries_.push_back(std::move(entry));
  std::sort(entries_.begin(), entries_.end(),
            [](const Entry& a, const Entry& b) { return a.reward > b.reward; });
  if (static_cast<int>(entries_.size()) > capacity_) entries_.resize(capacity_);
}

double ReplayBuffer::min_reward() const {
  return entries_.empty() ? kNegInf : entries_.back().reward;
}

namespace {

double reward_of(RewardKind kind, const TokenLibrary& lib, const Expression& expr,
                 const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double sigma2,
                 const PolicyConfig& cfg, int max_tokens) {
  switch (kind) {
    case RewardKind::Bic:
      return bic_reward(lib, expr, X, y, sigma2);
    case RewardKind::Nrmse: {
      EvalResult r = evaluate(lib, expr, X);
      if (!r.valid) return kNegInf;
      return nrmse_reward(y, r.values, std::sqrt(sigma2));
    }
    case RewardKind::Spl:
      return spl_reward(lib, expr, X, y, cfg.spl_eta);
    case RewardKind::Tpsr:
      return tpsr_reward(lib, expr, X, y, cfg.tpsr_lambda, max_tokens);
  }
  return kNegInf;
}

}  // namespace

TrainResult train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const TokenLibrary& lib, const ModelConfig& model_cfg,
                  const SampleConfig& sample_cfg, const PolicyConfig& policy_cfg,
                  const LMConfig& lm_cfg, std::uint64_t seed,
                  const TrainHooks& hooks) {
  policy_cfg.validate();
  sample_cfg.validate();
  lm_cfg.validate();

  ModelConfig mc = model_cfg;
  mc.vocab = lib.size();
  Model model(mc);
  Eigen::VectorXd theta = model.init_params(seed);

  const int B = sample_cfg.batch;
  const int top_k =
      std::max(1, static_cast<int>(std::ceil(policy_cfg.alpha * B / 100.0)));
  ReplayBuffer buffer(top_k);

  const double sigma2 = (y.array() - y.mean()).square().mean();
  if (!(sigma2 > 0.0)) throw UsageError("train: target variance is zero");

  AdamState adam;
  TrainResult res;
  res.best_reward = kNegInf;

  Eigen::VectorXd theta_ref = theta;

  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed_s = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
        .count();
  };

  for (int epoch = 0; epoch < policy_cfg.epochs; ++epoch) {
    if (policy_cfg.time_limit_s > 0.0 && elapsed_s() > policy_cfg.time_limit_s) {
      res.truncated = true;
      break;
    }
    res.epochs_run = epoch + 1;

    if (epoch % policy_cfg.epochs_per_ref == 0) theta_ref = theta;
    const Eigen::VectorXd theta_old = theta;

    std::vector<Trajectory> batch = sample_batch(
        model, lib, theta, sample_cfg, Rng::derive(seed, 1000003ull + epoch));
    if (hooks.on_batch) hooks.on_batch(epoch, batch);

    // Constants + rewards, independent per expression.
    const int nb = static_cast<int>(batch.size());
    std::vector<Expression> exprs(nb);
    std::vector<double> rewards(nb);
    parallel_for(static_cast<std::size_t>(nb), sample_cfg.threads, [&](std::size_t i) {
      Expression e;
      e.tree = batch[i].tree;
      const int nc = count_constants(lib, e.tree);
      if (nc > 0) {
        LMResult fit = fit_constants(lib, e, X, y, lm_cfg);
        e.constants = fit.poisoned ? std::vector<double>(nc, lm_cfg.initial_value)
                                   : fit.constants;
      }
      exprs[i] = std::move(e);
      rewards[i] =
          reward_of(policy_cfg.reward, lib, exprs[i], X, y, sigma2, policy_cfg,
                    sample_cfg.max_nodes);
      if (std::isnan(rewards[i])) rewards[i] = kNegInf;
    });

    const double r_alpha = risk_quantile(rewards, policy_cfg.alpha);

    // Top alpha percent of the batch, merged with the replay buffer.
    struct Cand {
      const Trajectory* traj;
      const Expression* expr;
      double reward;
    };
    std::vector<Cand> merged;
    std::set<std::vector<int>> merged_keys;
    if (std::isfinite(r_alpha)) {
      for (int i = 0; i < nb; ++i) {
        if (rewards[i] >= r_alpha && std::isfinite(rewards[i])) {
          if (merged_keys.insert(batch[i].tokens).second)
            merged.push_back({&batch[i], &exprs[i], rewards[i]});
        }
      }
    }
    for (const ReplayBuffer::Entry& e : buffer.entries())
      if (merged_keys.insert(e.traj.tokens).second)
        merged.push_back({&e.traj, &e.expr, e.reward});

    // Best-so-far update (raw reward, strictly better).
    for (const Cand& c : merged) {
      if (c.reward > res.best_reward) {
        res.best_reward = c.reward;
        res.best = *c.expr;
        res.has_best = true;
        res.epochs_to_best = epoch;
      }
    }

    EpochLog row;
    row.epoch = epoch;
    row.r_alpha = r_alpha;
    {
      std::set<std::vector<int>> uniq;
      for (const Trajectory& t : batch) uniq.insert(t.tokens);
      row.unique_sampled = static_cast<int>(uniq.size());
    }

    if (!merged.empty()) {
      std::vector<Trajectory> upd_copy;
      std::vector<double> upd_rewards;
      upd_copy.reserve(merged.size());
      for (const Cand& c : merged) {
        upd_copy.push_back(*c.traj);
        upd_rewards.push_back(c.reward);
      }

      // Weights fixed for the epoch, from the epoch's reward ranking.
      const double norm = 100.0 / (policy_cfg.alpha * B);
      ObjectiveSpec spec;
      spec.threads = sample_cfg.threads;
      spec.entropy_coef = policy_cfg.entropy_coef;
      if (policy_cfg.policy == PolicyKind::Grpo) {
        spec.use_ratio = true;
        spec.epsilon = policy_cfg.epsilon;
        spec.kl_coef = norm * policy_cfg.beta;
      }
      std::vector<double> f;
      if (policy_cfg.policy == PolicyKind::BaselineRisk) {
        f.assign(upd_rewards.size(), 0.0);
        for (std::size_t i = 0; i < upd_rewards.size(); ++i) {
          double w = (upd_rewards[i] - r_alpha) * norm;
          f[i] = std::isfinite(w) && w > 0.0 ? w : 0.0;
        }
      } else {
        f = rank_map_with_base(upd_rewards, policy_cfg.alpha, policy_cfg.lambda, B);
        for (double& w : f) w *= norm;
      }
      spec.weights = f;
      for (double w : f)
        if (w > 0.0) ++row.positive_weights;

      std::vector<FrozenScore> old_scores, ref_scores;
      if (spec.use_ratio) {
        old_scores.resize(upd_copy.size());
        parallel_for(upd_copy.size(), sample_cfg.threads, [&](std::size_t i) {
          old_scores[i] = score_trajectory(model, lib, upd_copy[i], theta_old, false);
        });
      }
      if (spec.kl_coef != 0.0) {
        ref_scores.resize(upd_copy.size());
        parallel_for(upd_copy.size(), sample_cfg.threads, [&](std::size_t i) {
          ref_scores[i] = score_trajectory(model, lib, upd_copy[i], theta_ref, true);
        });
      }

      for (int c = 0; c < policy_cfg.steps_per_epoch; ++c) {
        ObjectiveResult obj = policy_objective(
            model, lib, upd_copy, spec, theta,
            spec.use_ratio ? &old_scores : nullptr,
            spec.kl_coef != 0.0 ? &ref_scores : nullptr);
        if (c == 0) {
          row.mean_entropy = obj.mean_entropy;
          row.mean_kl = obj.mean_kl;
          row.clip_active_fraction = obj.clip_active_fraction;
        }
        if (obj.finite) {
          Eigen::VectorXd descent = -obj.grad;
          adam_step(theta, descent, adam, policy_cfg.learning_rate);
        } else {
          ++adam.skipped;
        }
      }

      // Refresh the buffer with the epoch's merged top performers. Copies are
      // taken first: some candidates point into the buffer being mutated.
      std::vector<ReplayBuffer::Entry> offers;
      offers.reserve(merged.size());
      for (const Cand& c : merged) offers.push_back({*c.traj, *c.expr, c.reward});
      for (ReplayBuffer::Entry& e : offers) buffer.offer(std::move(e));
    }

    row.best_reward = res.best_reward;
    row.buffer_min = buffer.min_reward();
    res.log.push_back(row);
    if (hooks.on_epoch) hooks.on_epoch(row);
    if (policy_cfg.checkpoint_every > 0 && (epoch + 1) % policy_cfg.checkpoint_every == 0 &&
        hooks.on_checkpoint)
      hooks.on_checkpoint(epoch, theta);
  }

  return res;
}

}  // namespace symreg
