#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "symreg/levmar.hpp"
#include "symreg/model.hpp"
#include "symreg/policy.hpp"
#include "symreg/sampler.hpp"

namespace symreg {

// Everything a run needs, with defaults matching the reference hyperparameter
// setting. Loaded from a versioned `key = value` text file; unknown keys are
// rejected. Values can be overridden by SYMREG_* environment variables and
// command-line flags (flags win).
struct RunConfig {
  int config_version = 1;

  // token library
  std::vector<std::string> unary = {"sin", "cos", "log", "sqrt", "exp"};
  std::vector<std::string> binary = {"add", "sub", "mul", "div", "pow"};
  bool use_constant = true;
  bool use_literal_one = true;

  // model
  int embed_dim = 10;
  int decoder_layers = 1;
  int encoder_layers = 0;  // must stay 0; kept so configs state it explicitly
  int heads = 1;
  int ff_size = 2048;
  int dct_clip = 8;

  // sampling
  int batch = 1000;
  double oversampling = 2.0;
  int max_nodes = 32;

  // policy
  double alpha = 5.0;
  double lambda = 0.2;
  double entropy_coef = 0.005;
  double beta = 0.01;
  double epsilon = 0.2;
  double learning_rate = 1e-4;
  int epochs = 600;
  int steps_per_epoch = 5;  // C
  int epochs_per_ref = 5;   // G
  std::string reward = "bic";   // bic | nrmse | spl | tpsr
  std::string policy = "grpo";  // grpo | rank | baseline
  double spl_eta = 0.99;
  double tpsr_lambda = 0.1;

  // constant fitting
  int lm_max_iterations = 50;
  double lm_initial_damping = 1e-3;

  // run control
  std::uint64_t seed = 0;
  int threads = 1;
  double noise = 0.0;
  double time_limit_s = 0.0;
  double train_fraction = 0.75;
  int checkpoint_every = 0;
  std::string out_dir = "out";

  // benchmark problems: name ; target infix ; lo ; hi ; train pts ; test pts
  struct Problem {
    std::string name;
    std::string target;
    double lo = -1.0;
    double hi = 1.0;
    int train_points = 100;
    int test_points = 100;
  };
  std::vector<Problem> problems;
  std::vector<std::uint64_t> trial_seeds = {0, 1, 2, 3, 4};
  std::vector<double> noise_levels = {0.0};

  TokenLibrary make_library(int variable_count) const;
  ModelConfig make_model_config(int vocab) const;
  SampleConfig make_sample_config() const;
  PolicyConfig make_policy_config() const;
  LMConfig make_lm_config() const;
};

// Parses a config file. Throws Error (config problems carry exit-code-2
// semantics at the CLI).
RunConfig parse_config_file(const std::string& path);

// Applies one `key = value` override; throws Error on unknown keys or
// malformed values.
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

// Applies every SYMREG_<KEY> environment variable present.
void apply_env_overrides(RunConfig& cfg);

// Serializes the full configuration (one key per line, stable order).
std::string dump_config(const RunConfig& cfg);

}  // namespace symreg
