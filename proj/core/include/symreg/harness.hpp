#pragma once

#include <string>
#include <vector>

#include "symreg/config.hpp"
#include "symreg/dataset.hpp"
#include "symreg/infix.hpp"
#include "symreg/policy.hpp"

namespace symreg {

// Numeric stand-in for symbolic correctness: candidate and ground truth agree
// on quasi-random points across the domain box. Constants must already be
// fitted.
bool solution_check(const TokenLibrary& lib, const Expression& candidate,
                    const Expression& ground_truth, const Eigen::VectorXd& lo,
                    const Eigen::VectorXd& hi, int n_points = 500);

// Domination statistics over per-epoch reward logs. Each log row is the full
// reward list of one epoch; the top ceil(alpha*B/100) rewards form the epoch's
// tail set. For every k in k_list the table reports the fraction of epochs
// whose top-k tail rewards hold more than 80% of the tail's total reward mass
// (k = 0 counts epochs whose tail mass is zero). full_barrier_fraction is the
// fraction of epochs where every tail reward is identical, which zeroes all
// reward-difference weights.
struct TailBarrierTable {
  std::vector<std::pair<int, double>> domination;  // (k, fraction of epochs)
  double full_barrier_fraction = 0.0;
};
TailBarrierTable tail_barrier_stats(const std::vector<std::vector<double>>& epoch_rewards,
                                    double alpha, const std::vector<int>& k_list);

// The constructed reward set that defeats a continuous bounded mapping in
// 32-bit precision while rank weights stay distinct: z_i = 1e9 + i * 1e-4.
struct BarrierDemo {
  std::vector<double> raw;
  std::vector<float> mapped32;       // 1/(1+z) evaluated in float32
  bool mapped_all_equal = false;
  bool baseline_all_zero = false;    // reward-difference weights over mapped32
  std::vector<double> rank_weights;  // rank_map over the raw values
  int positive_rank_weights = 0;
  bool strictly_decreasing = false;  // among the positive weights, by rank
};
BarrierDemo barrier_demo(int count, double alpha, double lambda);

// One training trial inside an experiment.
struct TrialReport {
  std::string problem;
  std::uint64_t seed = 0;
  double noise = 0.0;
  bool has_best = false;
  std::string best_infix;
  double best_reward = 0.0;
  double r2_train = 0.0;
  double r2_test = 0.0;
  int complexity_k = 0;
  int epochs_to_best = -1;
  int epochs_run = 0;
  bool truncated = false;
  bool solved = false;
  std::string error;  // non-empty if the trial crashed
  double wall_time_s = 0.0;
  std::vector<EpochLog> epoch_log;
};

// JSON form of a trial (stable key order; non-finite numbers become null).
std::string trial_to_json(const TrialReport& trial);

// Builds the dataset for a generated problem: uniform points on [lo, hi]^V,
// targets from the parsed expression, Gaussian noise on the training rows.
Dataset make_problem_dataset(const RunConfig::Problem& problem, double noise,
                             std::uint64_t seed);

// Number of input variables a target expression references (max x<i> index).
int infer_variable_count(const std::string& target_infix);

// Runs one trial; never throws (crashes land in TrialReport::error).
TrialReport run_trial(const RunConfig& cfg, const RunConfig::Problem& problem,
                      double noise, std::uint64_t seed);

// Full experiment: every problem x noise level x seed. Writes per-trial JSON,
// per-problem learning-curve CSVs, and an aggregate CSV under cfg.out_dir.
// Returns the trial reports in execution order.
std::vector<TrialReport> run_experiment(const RunConfig& cfg);

}  // namespace symreg
