#include "symreg/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "symreg/rng.hpp"

namespace symreg {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

bool solution_check(const TokenLibrary& lib, const Expression& candidate,
                    const Expression& ground_truth, const Eigen::VectorXd& lo,
                    const Eigen::VectorXd& hi, int n_points) {
  return numeric_equiv(lib, candidate, ground_truth, lo, hi, n_points);
}

TailBarrierTable tail_barrier_stats(const std::vector<std::vector<double>>& epoch_rewards,
                                    double alpha, const std::vector<int>& k_list) {
  if (!(alpha > 0.0) || alpha > 100.0)
    throw UsageError("tail_barrier_stats: alpha must be in (0, 100]");
  TailBarrierTable table;
  for (int k : k_list) table.domination.emplace_back(k, 0.0);
  if (epoch_rewards.empty()) return table;

  int full_barrier = 0;
  std::vector<long> dominated(k_list.size(), 0);
  for (const std::vector<double>& epoch : epoch_rewards) {
    if (epoch.empty()) continue;
    std::vector<double> sorted(epoch);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    const int B = static_cast<int>(sorted.size());
    int top = std::clamp(static_cast<int>(std::ceil(alpha * B / 100.0)), 1, B);
    sorted.resize(top);

    double total = 0.0;
    for (double v : sorted) total += v;
    if (sorted.front() == sorted.back()) ++full_barrier;

    double prefix = 0.0;
    for (std::size_t ki = 0; ki < k_list.size(); ++ki) {
      const int k = k_list[ki];
      if (k == 0) {
        if (total == 0.0) ++dominated[ki];
        continue;
      }
      prefix = 0.0;
      for (int i = 0; i < std::min(k, top); ++i) prefix += sorted[i];
      if (prefix > 0.8 * total) ++dominated[ki];
    }
  }
  const double n = static_cast<double>(epoch_rewards.size());
  for (std::size_t ki = 0; ki < k_list.size(); ++ki)
    table.domination[ki].second = dominated[ki] / n;
  table.full_barrier_fraction = full_barrier / n;
  return table;
}

BarrierDemo barrier_demo(int count, double alpha, double lambda) {
  BarrierDemo demo;
  demo.raw.resize(count);
  demo.mapped32.resize(count);
  for (int i = 0; i < count; ++i) {
    demo.raw[i] = 1e9 + i * 1e-4;
    float z = static_cast<float>(demo.raw[i]);
    demo.mapped32[i] = 1.0f / (1.0f + z);
  }
  demo.mapped_all_equal = std::all_of(
      demo.mapped32.begin(), demo.mapped32.end(),
      [&](float v) { return v == demo.mapped32.front(); });

  // Reward-difference weights over the mapped values.
  std::vector<double> mapped(demo.mapped32.begin(), demo.mapped32.end());
  double r_alpha = risk_quantile(mapped, alpha);
  demo.baseline_all_zero = true;
  for (double v : mapped)
    if (v >= r_alpha && v - r_alpha != 0.0) demo.baseline_all_zero = false;

  demo.rank_weights = rank_map(demo.raw, alpha, lambda);
  std::vector<int> order(count);
  for (int i = 0; i < count; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return demo.raw[a] > demo.raw[b]; });
  demo.strictly_decreasing = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int idx : order) {
    double w = demo.rank_weights[idx];
    if (w > 0.0) {
      ++demo.positive_rank_weights;
      if (!(w < prev)) demo.strictly_decreasing = false;
      prev = w;
    }
  }
  return demo;
}

int infer_variable_count(const std::string& target_infix) {
  std::regex var_re("x([0-9]+)");
  int max_var = 0;
  for (std::sregex_iterator it(target_infix.begin(), target_infix.end(), var_re), end;
       it != end; ++it)
    max_var = std::max(max_var, std::stoi((*it)[1].str()));
  if (max_var == 0)
    throw Error("target expression references no variables: " + target_infix);
  return max_var;
}

Dataset make_problem_dataset(const RunConfig::Problem& problem, double noise,
                             std::uint64_t seed) {
  const int V = infer_variable_count(problem.target);
  // Parsing the target needs a library with every operator available.
  TokenLibrary lib = TokenLibrary::build(
      V, {"sin", "cos", "log", "sqrt", "exp", "tan", "square"},
      {"add", "sub", "mul", "div", "pow"}, true, true);
  Expression truth = parse_infix(problem.target, lib);

  const int S = problem.train_points + problem.test_points;
  Dataset ds;
  ds.name = problem.name;
  ds.X.resize(S, V);
  Rng rng(Rng::derive(seed, 0xDA7A));
  for (int i = 0; i < S; ++i)
    for (int v = 0; v < V; ++v)
      ds.X(i, v) = problem.lo + (problem.hi - problem.lo) * rng.next_double();
  EvalResult ev = evaluate(lib, truth, ds.X);
  if (!ev.valid)
    throw Error("target '" + problem.target + "' poisons on its own domain");
  ds.y = ev.values;
  ds.train_idx.resize(problem.train_points);
  ds.test_idx.resize(problem.test_points);
  for (int i = 0; i < problem.train_points; ++i) ds.train_idx[i] = i;
  for (int i = 0; i < problem.test_points; ++i)
    ds.test_idx[i] = problem.train_points + i;
  ds.recompute_sigma();
  if (!(ds.sigma_y > 0.0))
    throw Error("target '" + problem.target + "' is constant on the domain");
  return add_noise(ds, noise, Rng::derive(seed, 0x015e));
}

namespace {

ordered_json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

std::string trial_to_json(const TrialReport& t) {
  ordered_json j;
  j["problem"] = t.problem;
  j["seed"] = t.seed;
  j["noise"] = t.noise;
  j["has_best"] = t.has_best;
  j["best_expression"] = t.best_infix;
  j["best_reward"] = finite_or_null(t.best_reward);
  j["r2_train"] = finite_or_null(t.r2_train);
  j["r2_test"] = finite_or_null(t.r2_test);
  j["raw_complexity"] = t.complexity_k;
  j["epochs_to_best"] = t.epochs_to_best;
  j["epochs_run"] = t.epochs_run;
  j["truncated"] = t.truncated;
  j["solved"] = t.solved;
  j["error"] = t.error;
  j["wall_time_s"] = finite_or_null(t.wall_time_s);
  return j.dump(2) + "\n";
}

TrialReport run_trial(const RunConfig& cfg, const RunConfig::Problem& problem,
                      double noise, std::uint64_t seed) {
  TrialReport report;
  report.problem = problem.name;
  report.seed = seed;
  report.noise = noise;
  report.r2_train = std::numeric_limits<double>::quiet_NaN();
  report.r2_test = std::numeric_limits<double>::quiet_NaN();

  const auto t0 = std::chrono::steady_clock::now();
  try {
    Dataset ds = make_problem_dataset(problem, noise, seed);
    const int V = ds.vars();
    TokenLibrary lib = cfg.make_library(V);

    TrainResult tr = train(ds.train_X(), ds.train_y(), lib,
                           cfg.make_model_config(lib.size()),
                           cfg.make_sample_config(), cfg.make_policy_config(),
                           cfg.make_lm_config(), seed);
    report.epochs_run = tr.epochs_run;
    report.truncated = tr.truncated;
    report.epoch_log = tr.log;
    report.has_best = tr.has_best;
    if (tr.has_best) {
      report.best_infix = to_infix(lib, tr.best);
      report.best_reward = tr.best_reward;
      report.epochs_to_best = tr.epochs_to_best;
      report.complexity_k = complexity(lib, tr.best);
      EvalResult on_train = evaluate(lib, tr.best, ds.train_X());
      EvalResult on_test = evaluate(lib, tr.best, ds.test_X());
      if (on_train.valid) report.r2_train = r2_score(ds.train_y(), on_train.values);
      if (on_test.valid) report.r2_test = r2_score(ds.test_y(), on_test.values);

      TokenLibrary truth_lib = TokenLibrary::build(
          V, {"sin", "cos", "log", "sqrt", "exp", "tan", "square"},
          {"add", "sub", "mul", "div", "pow"}, true, true);
      Expression truth = parse_infix(problem.target, truth_lib);
      // Re-express the candidate over the wider library for the comparison.
      Expression candidate = parse_infix(to_infix(lib, tr.best), truth_lib);
      Eigen::VectorXd lo = Eigen::VectorXd::Constant(V, problem.lo);
      Eigen::VectorXd hi = Eigen::VectorXd::Constant(V, problem.hi);
      report.solved = solution_check(truth_lib, candidate, truth, lo, hi);
    }
  } catch (const std::exception& e) {
    report.error = e.what();
  }
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::vector<TrialReport> run_experiment(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  fs::create_directories(cfg.out_dir + "/trials");
  fs::create_directories(cfg.out_dir + "/curves");

  {
    std::ofstream cfg_out(cfg.out_dir + "/config_used.txt");
    cfg_out << dump_config(cfg);
  }

  std::vector<TrialReport> trials;
  for (const RunConfig::Problem& problem : cfg.problems) {
    for (double noise : cfg.noise_levels) {
      for (std::uint64_t seed : cfg.trial_seeds) {
        TrialReport t = run_trial(cfg, problem, noise, seed);
        std::ostringstream name;
        name << problem.name << "_n" << noise << "_s" << seed;
        std::ofstream out(cfg.out_dir + "/trials/" + name.str() + ".json");
        out << trial_to_json(t);
        trials.push_back(std::move(t));
      }

      // Learning curve: per-epoch mean and std of best-so-far reward across seeds.
      std::ostringstream curve_name;
      curve_name << problem.name << "_n" << noise << ".csv";
      std::ofstream curve(cfg.out_dir + "/curves/" + curve_name.str());
      curve << "epoch,mean_best_reward,std_best_reward,trials\n";
      const std::size_t base = trials.size() - cfg.trial_seeds.size();
      int max_epochs = 0;
      for (std::size_t i = base; i < trials.size(); ++i)
        max_epochs = std::max(max_epochs,
                              static_cast<int>(trials[i].epoch_log.size()));
      for (int e = 0; e < max_epochs; ++e) {
        double sum = 0.0, sum2 = 0.0;
        int n = 0;
        for (std::size_t i = base; i < trials.size(); ++i) {
          if (e < static_cast<int>(trials[i].epoch_log.size()) &&
              std::isfinite(trials[i].epoch_log[e].best_reward)) {
            sum += trials[i].epoch_log[e].best_reward;
            sum2 += trials[i].epoch_log[e].best_reward *
                    trials[i].epoch_log[e].best_reward;
            ++n;
          }
        }
        if (n == 0) continue;
        double mean = sum / n;
        double var = std::max(0.0, sum2 / n - mean * mean);
        curve << e << ',' << mean << ',' << std::sqrt(var) << ',' << n << "\n";
      }
    }
  }

  // Aggregate: solution rate, accuracy rate, mean raw complexity.
  std::ofstream agg(cfg.out_dir + "/aggregate.csv");
  agg << "problem,noise,trials,solution_rate,accuracy_rate,mean_raw_complexity\n";
  for (const RunConfig::Problem& problem : cfg.problems) {
    for (double noise : cfg.noise_levels) {
      int n = 0, solved = 0, accurate = 0;
      double ksum = 0.0;
      int kcount = 0;
      for (const TrialReport& t : trials) {
        if (t.problem != problem.name || t.noise != noise) continue;
        ++n;
        if (t.solved) ++solved;
        if (std::isfinite(t.r2_test) && t.r2_test > 0.999) ++accurate;
        if (t.has_best) {
          ksum += t.complexity_k;
          ++kcount;
        }
      }
      if (n == 0) continue;
      agg << problem.name << ',' << noise << ',' << n << ','
          << static_cast<double>(solved) / n << ','
          << static_cast<double>(accurate) / n << ','
          << (kcount ? ksum / kcount : 0.0) << "\n";
    }
  }
  return trials;
}

}  // namespace symreg
