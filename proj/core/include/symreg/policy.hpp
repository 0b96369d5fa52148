#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "symreg/adam.hpp"
#include "symreg/levmar.hpp"
#include "symreg/rewards.hpp"
#include "symreg/sampler.hpp"

namespace symreg {

enum class RewardKind { Bic, Nrmse, Spl, Tpsr };
enum class PolicyKind { BaselineRisk, RankMapped, Grpo };

struct PolicyConfig {
  double alpha = 5.0;          // risk-seeking percent
  double lambda = 0.2;         // rank-map scale
  double epsilon = 0.2;        // ratio clip width, in (0, 1)
  double beta = 0.01;          // KL penalty coefficient
  double entropy_coef = 0.005; // entropy bonus weight
  int steps_per_epoch = 5;     // C, optimizer steps per epoch
  int epochs_per_ref = 5;      // G, epochs between reference refreshes
  double learning_rate = 1e-4;
  int epochs = 600;            // T
  PolicyKind policy = PolicyKind::Grpo;
  RewardKind reward = RewardKind::Bic;
  double spl_eta = 0.99;
  double tpsr_lambda = 0.1;
  double time_limit_s = 0.0;   // 0 = unlimited
  int checkpoint_every = 0;    // epochs; 0 = never

  void validate() const;
};

// Chosen-token log-probs (and, optionally, the full masked log-prob vector
// per step) of a trajectory under a frozen parameter snapshot.
struct FrozenScore {
  Eigen::VectorXd chosen;                      // per step
  std::vector<Eigen::VectorXd> full;           // per step, empty unless requested
};
FrozenScore score_trajectory(const Model& model, const TokenLibrary& lib,
                             const Trajectory& traj, const Eigen::VectorXd& theta,
                             bool keep_full);

// Specification of one policy objective evaluation over a trajectory batch.
// The scalar being differentiated is
//   J = sum_i w_i * sum_j lp_ij                          (score form), or
//   J = sum_i w_i * sum_j min(g_ij, clip(g_ij, 1 +/- eps))   (ratio form)
//     - kl_coef * sum_ij KL(p_theta(.|ctx_ij) || p_ref(.|ctx_ij))
//     + entropy_coef * mean_j entropy(p_theta(.|ctx_ij))
// where g_ij = p_theta(token_ij) / p_old(token_ij). Weights already carry any
// 100/(alpha B) normalization.
struct ObjectiveSpec {
  std::vector<double> weights;  // one per trajectory
  bool use_ratio = false;
  double epsilon = 0.2;
  double kl_coef = 0.0;
  double entropy_coef = 0.0;
  int threads = 1;
};

struct ObjectiveResult {
  double value = 0.0;
  Eigen::VectorXd grad;          // dJ/dtheta (ascent direction)
  double mean_kl = 0.0;          // per-token mean
  double mean_entropy = 0.0;     // per-token mean
  double clip_active_fraction = 0.0;  // weighted tokens with g outside the trust region
  bool finite = true;
  int bad_trajectory = -1;       // index that produced a non-finite gradient
};

// Evaluates the objective and its gradient. `old_scores` supplies chosen-token
// log-probs under theta_old (required for the ratio form); `ref_scores`
// supplies full log-prob vectors under theta_ref (required when kl_coef > 0).
ObjectiveResult policy_objective(const Model& model, const TokenLibrary& lib,
                                 std::span<const Trajectory> batch,
                                 const ObjectiveSpec& spec,
                                 const Eigen::VectorXd& theta,
                                 const std::vector<FrozenScore>* old_scores,
                                 const std::vector<FrozenScore>* ref_scores);

// Risk-seeking score gradient with reward-difference weights:
// (1 / (alpha B/100)) * sum_i (R_i - R_alpha) 1[R_i >= R_alpha] grad log p_i.
// Expressions below the quantile contribute nothing. Returns the ascent
// gradient.
Eigen::VectorXd baseline_risk_grad(const Model& model, const TokenLibrary& lib,
                                   std::span<const Trajectory> batch,
                                   const std::vector<double>& rewards,
                                   const Eigen::VectorXd& theta, double alpha,
                                   int threads = 1);

// k-th largest reward with k = ceil(alpha * B / 100): the (1 - alpha/100)
// quantile used for top-percent selection.
double risk_quantile(const std::vector<double>& rewards, double alpha);

// Replay buffer of the historically best trajectories (by raw reward), with
// their fitted constants. Capacity ceil(alpha * B / 100).
class ReplayBuffer {
 public:
  struct Entry {
    Trajectory traj;
    Expression expr;  // constants fitted once, kept fixed
    double reward = 0.0;
  };

  explicit ReplayBuffer(int capacity) : capacity_(capacity) {}

  void offer(Entry entry);
  const std::vector<Entry>& entries() const { return entries_; }
  double min_reward() const;
  int capacity() const { return capacity_; }

 private:
  int capacity_;
  std::vector<Entry> entries_;  // kept sorted by reward descending
};

struct EpochLog {
  int epoch = 0;
  double best_reward = 0.0;      // best so far
  double r_alpha = 0.0;          // epoch reward quantile
  double buffer_min = 0.0;
  double mean_entropy = 0.0;
  double mean_kl = 0.0;
  double clip_active_fraction = 0.0;
  int positive_weights = 0;      // expressions with f > 0
  int unique_sampled = 0;
};

struct TrainResult {
  bool has_best = false;
  Expression best;
  double best_reward = 0.0;
  int epochs_to_best = -1;   // epoch where the final best first appeared
  int epochs_run = 0;
  bool truncated = false;    // stopped by the wall-clock budget
  std::vector<EpochLog> log;
};

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
  std::function<void(int, const Eigen::VectorXd&)> on_checkpoint;
  // Debugging tap on the raw sampled batch, called once per epoch before
  // constant fitting.
  std::function<void(int, std::span<const Trajectory>)> on_batch;
};

// Full training loop: snapshot old/reference parameters, sample a batch, fit
// constants, compute rewards, rank-map the top alpha percent, merge the
// replay buffer, take C optimizer steps, track the best expression.
TrainResult train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const TokenLibrary& lib, const ModelConfig& model_cfg,
                  const SampleConfig& sample_cfg, const PolicyConfig& policy_cfg,
                  const LMConfig& lm_cfg, std::uint64_t seed,
                  const TrainHooks& hooks = {});

}  // namespace symreg
