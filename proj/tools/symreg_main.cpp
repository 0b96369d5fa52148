// Command-line driver: fit expressions to CSV data, run benchmark
// experiments, inspect expressions, and reproduce the reward-mapping
// precision experiments.
//
// Exit codes: 0 success, 1 internal error, 2 configuration error, 3 data error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "symreg/harness.hpp"
#include "symreg/rng.hpp"

namespace fs = std::filesystem;
using namespace symreg;

namespace {

struct FlagOverrides {
  std::string config_path;
  std::vector<std::string> sets;  // raw key=value pairs
  std::uint64_t seed = 0;
  std::string out;
  int threads = 0;
  int epochs = 0;
  int batch = 0;
  double alpha = 0;
  double noise = 0;
  double time_limit_s = 0;
};

void add_common_flags(CLI::App* cmd, FlagOverrides& fo) {
  cmd->add_option("--config", fo.config_path, "configuration file (key = value)");
  cmd->add_option("--set", fo.sets, "extra key=value override (repeatable)");
  cmd->add_option("--seed", fo.seed, "random seed");
  cmd->add_option("--out", fo.out, "output directory");
  cmd->add_option("--threads", fo.threads, "worker threads (0 = all logical cores)");
  cmd->add_option("--epochs", fo.epochs, "training epochs");
  cmd->add_option("--batch", fo.batch, "expressions sampled per epoch");
  cmd->add_option("--alpha", fo.alpha, "risk-seeking percent");
  cmd->add_option("--noise", fo.noise, "training-noise level (fraction of sigma_y)");
  cmd->add_option("--time-limit-s", fo.time_limit_s, "wall-clock budget per run");
}

// Precedence: built-in defaults < config file < SYMREG_* env < flags.
RunConfig build_config(const CLI::App* cmd, const FlagOverrides& fo) {
  RunConfig cfg;
  if (!fo.config_path.empty()) cfg = parse_config_file(fo.config_path);
  apply_env_overrides(cfg);
  auto passed = [&](const char* name) { return cmd->count(name) > 0; };
  if (passed("--seed")) cfg.seed = fo.seed;
  if (passed("--out")) cfg.out_dir = fo.out;
  if (passed("--threads"))
    cfg.threads = fo.threads == 0
                      ? static_cast<int>(std::thread::hardware_concurrency())
                      : fo.threads;
  if (passed("--epochs")) cfg.epochs = fo.epochs;
  if (passed("--batch")) cfg.batch = fo.batch;
  if (passed("--alpha")) cfg.alpha = fo.alpha;
  if (passed("--noise")) cfg.noise = fo.noise;
  if (passed("--time-limit-s")) cfg.time_limit_s = fo.time_limit_s;
  for (const std::string& kv : fo.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw Error("--set expects key=value, got '" + kv + "'");
    apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

int cmd_fit(const RunConfig& cfg, const std::string& csv_path,
            const std::string& dump_batch_path) {
  Dataset ds = load_csv(csv_path);
  split_train_test(ds, cfg.train_fraction, cfg.seed);
  if (cfg.noise > 0.0) ds = add_noise(ds, cfg.noise, Rng::derive(cfg.seed, 0x70153));

  TokenLibrary lib = cfg.make_library(ds.vars());
  fs::create_directories(cfg.out_dir);
  std::ofstream log(cfg.out_dir + "/train_log.csv");
  log << "epoch,best_reward,r_alpha,buffer_min,mean_entropy,mean_kl,"
         "clip_active_fraction,positive_weights,unique_sampled\n";

  Model checkpoint_model(cfg.make_model_config(lib.size()));
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochLog& row) {
    log << row.epoch << ',' << row.best_reward << ',' << row.r_alpha << ','
        << row.buffer_min << ',' << row.mean_entropy << ',' << row.mean_kl << ','
        << row.clip_active_fraction << ',' << row.positive_weights << ','
        << row.unique_sampled << "\n";
  };
  hooks.on_checkpoint = [&](int epoch, const Eigen::VectorXd& theta) {
    std::ofstream out(cfg.out_dir + "/checkpoint_" + std::to_string(epoch) + ".bin",
                      std::ios::binary);
    save_params(out, checkpoint_model, theta);
  };
  std::ofstream batch_dump;
  if (!dump_batch_path.empty()) {
    batch_dump.open(dump_batch_path);
    hooks.on_batch = [&](int epoch, std::span<const Trajectory> batch) {
      for (const Trajectory& t : batch)
        batch_dump << epoch << '\t' << to_infix(lib, t.tree) << '\t'
                   << t.step_logprob.sum() << "\n";
    };
  }

  TrainResult res = train(ds.train_X(), ds.train_y(), lib,
                          cfg.make_model_config(lib.size()), cfg.make_sample_config(),
                          cfg.make_policy_config(), cfg.make_lm_config(), cfg.seed,
                          hooks);

  TrialReport report;
  report.problem = ds.name;
  report.seed = cfg.seed;
  report.noise = cfg.noise;
  report.has_best = res.has_best;
  report.epochs_run = res.epochs_run;
  report.truncated = res.truncated;
  report.r2_train = std::numeric_limits<double>::quiet_NaN();
  report.r2_test = std::numeric_limits<double>::quiet_NaN();
  if (res.has_best) {
    report.best_infix = to_infix(lib, res.best);
    report.best_reward = res.best_reward;
    report.epochs_to_best = res.epochs_to_best;
    report.complexity_k = complexity(lib, res.best);
    EvalResult on_train = evaluate(lib, res.best, ds.train_X());
    if (on_train.valid && ds.train_idx.size() > 1)
      report.r2_train = r2_score(ds.train_y(), on_train.values);
    if (ds.test_idx.size() > 1) {
      EvalResult on_test = evaluate(lib, res.best, ds.test_X());
      if (on_test.valid) report.r2_test = r2_score(ds.test_y(), on_test.values);
    }
  }
  std::ofstream out(cfg.out_dir + "/report.json");
  out << trial_to_json(report);

  if (!res.has_best) {
    std::cout << "no expression found\n";
    return 0;
  }
  std::cout << "expression: " << report.best_infix << "\n";
  std::cout << "r2_train:   " << report.r2_train << "\n";
  if (ds.test_idx.size() > 1) std::cout << "r2_test:    " << report.r2_test << "\n";
  std::cout << "complexity: " << report.complexity_k << "\n";
  std::cout << "epochs:     " << report.epochs_run
            << (report.truncated ? " (time limit reached)" : "") << "\n";
  return 0;
}

int cmd_bench(const RunConfig& cfg) {
  std::vector<TrialReport> trials = run_experiment(cfg);
  int solved = 0;
  for (const TrialReport& t : trials) solved += t.solved;
  std::cout << trials.size() << " trials, " << solved << " solved; outputs in "
            << cfg.out_dir << "\n";
  return 0;
}

int cmd_inspect(const RunConfig& cfg, const std::string& expr_text,
                const std::string& data_path, int vars) {
  int V = vars > 0 ? vars : infer_variable_count(expr_text);
  TokenLibrary lib = cfg.make_library(V);
  Expression e = parse_infix(expr_text, lib);

  std::cout << "infix:      " << to_infix(lib, e, data_path.empty()) << "\n";
  std::cout << "complexity: " << complexity(lib, e) << " (" << e.tree.node_count()
            << " nodes, " << count_constants(lib, e.tree) << " constants)\n";
  std::cout << "bfs nodes (index, token, parent, depth, horizontal):\n";
  for (int i = 0; i < e.tree.node_count(); ++i) {
    const ExprNode& n = e.tree.nodes[i];
    std::cout << "  " << i << "\t" << lib[n.token_id].symbol << "\t" << n.parent
              << "\t" << n.depth << "\t" << n.horizontal << "\n";
  }

  if (!data_path.empty()) {
    Dataset ds = load_csv(data_path);
    if (ds.vars() < V)
      throw DataError("data has fewer input columns than the expression uses");
    if (count_constants(lib, e.tree) > 0) {
      LMResult fit = fit_constants(lib, e, ds.X, ds.y, cfg.make_lm_config());
      if (fit.poisoned) {
        std::cout << "constant fit: poisoned evaluation\n";
        return 0;
      }
      e.constants = fit.constants;
      std::cout << "fitted:     " << to_infix(lib, e) << "\n";
    }
    EvalResult r = evaluate(lib, e, ds.X);
    if (r.valid && ds.rows() > 1)
      std::cout << "r2:         " << r2_score(ds.y, r.values) << "\n";
    else
      std::cout << "r2:         undefined (poisoned rows)\n";
  }
  return 0;
}

int cmd_tail_lab(const RunConfig& cfg, const std::string& rewards_log, int count) {
  fs::create_directories(cfg.out_dir);

  BarrierDemo demo = barrier_demo(count, cfg.alpha, cfg.lambda);
  {
    std::ofstream out(cfg.out_dir + "/barrier_demo.csv");
    out << "i,raw,mapped_float32,mapped_float64,rank_weight\n";
    out.precision(17);
    for (int i = 0; i < count; ++i) {
      double mapped64 = 1.0 / (1.0 + demo.raw[i]);
      out << i << ',' << demo.raw[i] << ',' << demo.mapped32[i] << ',' << mapped64
          << ',' << demo.rank_weights[i] << "\n";
    }
  }
  bool mapped64_all_equal = true;
  for (int i = 1; i < count; ++i)
    if (1.0 / (1.0 + demo.raw[i]) != 1.0 / (1.0 + demo.raw[0]))
      mapped64_all_equal = false;
  std::cout << "constructed rewards:       " << count << " distinct values\n";
  std::cout << "float32 mapped all equal:  "
            << (demo.mapped_all_equal ? "true" : "false") << "\n";
  std::cout << "float64 mapped all equal:  " << (mapped64_all_equal ? "true" : "false")
            << "\n";
  std::cout << "baseline weights all zero: "
            << (demo.baseline_all_zero ? "true" : "false") << "\n";
  std::cout << "positive rank weights:     " << demo.positive_rank_weights << "\n";
  std::cout << "strictly decreasing:       "
            << (demo.strictly_decreasing ? "true" : "false") << "\n";

  // Synthetic heavy-tail logs for the domination table.
  std::vector<std::vector<double>> logs;
  Rng rng(cfg.seed);
  for (int e = 0; e < 1000; ++e) {
    std::vector<double> epoch(cfg.batch);
    for (double& v : epoch) v = std::pow(std::abs(rng.next_normal()), 6.0);
    if (rng.next_double() < 0.01) std::fill(epoch.begin(), epoch.end(), 0.0);
    logs.push_back(std::move(epoch));
  }
  std::vector<int> ks = {0, 1, 3, 5, 10};
  TailBarrierTable table = tail_barrier_stats(logs, cfg.alpha, ks);
  {
    std::ofstream out(cfg.out_dir + "/tail_table.csv");
    out << "k,fraction_dominated\n";
    for (auto& [k, frac] : table.domination) out << k << ',' << frac << "\n";
    out << "full_barrier," << table.full_barrier_fraction << "\n";
  }

  if (!rewards_log.empty()) {
    std::ifstream in(rewards_log);
    if (!in) throw DataError("cannot open rewards log '" + rewards_log + "'");
    std::vector<std::vector<double>> recorded;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<double> epoch;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) epoch.push_back(std::stod(cell));
      recorded.push_back(std::move(epoch));
    }
    TailBarrierTable rec = tail_barrier_stats(recorded, cfg.alpha, ks);
    std::ofstream out(cfg.out_dir + "/tail_table_recorded.csv");
    out << "k,fraction_dominated\n";
    for (auto& [k, frac] : rec.domination) out << k << ',' << frac << "\n";
    out << "full_barrier," << rec.full_barrier_fraction << "\n";
  }
  std::cout << "tables written to " << cfg.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"symbolic regression with a frequency-attention expression generator"};
  app.require_subcommand(1);

  FlagOverrides fo_fit, fo_bench, fo_inspect, fo_tail;
  std::string csv_path, expr_text, data_path, rewards_log, dump_batch_path;
  int inspect_vars = 0;
  int barrier_count = 100;

  CLI::App* fit = app.add_subcommand("fit", "discover an expression for a CSV dataset");
  fit->add_option("csv", csv_path, "input CSV (last column is the target)")->required();
  fit->add_option("--dump-batch", dump_batch_path,
                  "write every sampled expression (infix + log-prob) to this file");
  add_common_flags(fit, fo_fit);

  CLI::App* bench = app.add_subcommand("bench", "run the experiment suite from a config");
  add_common_flags(bench, fo_bench);

  CLI::App* inspect = app.add_subcommand("inspect", "print the tree of an expression");
  inspect->add_option("--expr", expr_text, "infix expression")->required();
  inspect->add_option("--data", data_path, "optional CSV to fit/score against");
  inspect->add_option("--vars", inspect_vars, "number of input variables");
  add_common_flags(inspect, fo_inspect);

  CLI::App* tail = app.add_subcommand("tail-lab", "reward-mapping precision experiments");
  tail->add_option("--rewards-log", rewards_log, "recorded per-epoch reward CSV");
  tail->add_option("--count", barrier_count, "constructed reward count");
  add_common_flags(tail, fo_tail);

  CLI11_PARSE(app, argc, argv);

  const CLI::App* active = fit->parsed()       ? fit
                           : bench->parsed()   ? bench
                           : inspect->parsed() ? inspect
                                               : tail;
  const FlagOverrides& fo = fit->parsed()       ? fo_fit
                            : bench->parsed()   ? fo_bench
                            : inspect->parsed() ? fo_inspect
                                                : fo_tail;
  RunConfig cfg;
  try {
    cfg = build_config(active, fo);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (fit->parsed()) return cmd_fit(cfg, csv_path, dump_batch_path);
    if (bench->parsed()) return cmd_bench(cfg);
    if (inspect->parsed()) return cmd_inspect(cfg, expr_text, data_path, inspect_vars);
    return cmd_tail_lab(cfg, rewards_log, barrier_count);
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
