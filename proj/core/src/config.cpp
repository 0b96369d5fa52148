#include "symreg/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace symreg {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& value, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : value) {
    if (ch == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  cur = trim(cur);
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw Error("config: '" + key + "' expects an integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw Error("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<std::uint64_t>(x);
  } catch (const std::exception&) {
    throw Error("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error("config: '" + key + "' expects a boolean, got '" + v + "'");
}

RunConfig::Problem parse_problem(const std::string& value) {
  std::vector<std::string> parts = split_list(value, ';');
  if (parts.size() != 6)
    throw Error("config: 'problem' expects 'name ; target ; lo ; hi ; train ; test'");
  RunConfig::Problem p;
  p.name = parts[0];
  p.target = parts[1];
  p.lo = to_double("problem.lo", parts[2]);
  p.hi = to_double("problem.hi", parts[3]);
  p.train_points = to_int("problem.train", parts[4]);
  p.test_points = to_int("problem.test", parts[5]);
  if (p.name.empty() || p.target.empty() || !(p.lo < p.hi) || p.train_points < 2 ||
      p.test_points < 2)
    throw Error("config: malformed problem '" + value + "'");
  return p;
}

}  // namespace

void apply_override(RunConfig& c, const std::string& raw_key, const std::string& raw_value) {
  std::string key = trim(raw_key);
  std::string value = trim(raw_value);
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });

  if (key == "config_version") {
    c.config_version = to_int(key, value);
    if (c.config_version != 1)
      throw Error("config: unsupported config_version " + value);
  } else if (key == "unary") {
    c.unary = split_list(value, ',');
  } else if (key == "binary") {
    c.binary = split_list(value, ',');
  } else if (key == "use_constant") {
    c.use_constant = to_bool(key, value);
  } else if (key == "use_literal_one") {
    c.use_literal_one = to_bool(key, value);
  } else if (key == "embed_dim") {
    c.embed_dim = to_int(key, value);
  } else if (key == "decoder_layers") {
    c.decoder_layers = to_int(key, value);
  } else if (key == "encoder_layers") {
    int v = to_int(key, value);
    if (v != 0)
      throw Error("config: encoder_layers must be 0 (decoder-only architecture)");
    c.encoder_layers = v;
  } else if (key == "heads") {
    c.heads = to_int(key, value);
  } else if (key == "ff_size") {
    c.ff_size = to_int(key, value);
  } else if (key == "dct_clip") {
    c.dct_clip = to_int(key, value);
  } else if (key == "batch") {
    c.batch = to_int(key, value);
  } else if (key == "oversampling") {
    c.oversampling = to_double(key, value);
  } else if (key == "max_nodes") {
    c.max_nodes = to_int(key, value);
  } else if (key == "alpha") {
    c.alpha = to_double(key, value);
  } else if (key == "lambda") {
    c.lambda = to_double(key, value);
  } else if (key == "entropy_coef") {
    c.entropy_coef = to_double(key, value);
  } else if (key == "beta") {
    c.beta = to_double(key, value);
  } else if (key == "epsilon") {
    c.epsilon = to_double(key, value);
  } else if (key == "learning_rate") {
    c.learning_rate = to_double(key, value);
  } else if (key == "epochs") {
    c.epochs = to_int(key, value);
  } else if (key == "steps_per_epoch") {
    c.steps_per_epoch = to_int(key, value);
  } else if (key == "epochs_per_ref") {
    c.epochs_per_ref = to_int(key, value);
  } else if (key == "reward") {
    if (value != "bic" && value != "nrmse" && value != "spl" && value != "tpsr")
      throw Error("config: unknown reward '" + value + "'");
    c.reward = value;
  } else if (key == "policy") {
    if (value != "grpo" && value != "rank" && value != "baseline")
      throw Error("config: unknown policy '" + value + "'");
    c.policy = value;
  } else if (key == "spl_eta") {
    c.spl_eta = to_double(key, value);
  } else if (key == "tpsr_lambda") {
    c.tpsr_lambda = to_double(key, value);
  } else if (key == "lm_max_iterations") {
    c.lm_max_iterations = to_int(key, value);
  } else if (key == "lm_initial_damping") {
    c.lm_initial_damping = to_double(key, value);
  } else if (key == "seed") {
    c.seed = to_u64(key, value);
  } else if (key == "threads") {
    c.threads = to_int(key, value);
  } else if (key == "noise") {
    c.noise = to_double(key, value);
  } else if (key == "time_limit_s") {
    c.time_limit_s = to_double(key, value);
  } else if (key == "train_fraction") {
    c.train_fraction = to_double(key, value);
  } else if (key == "checkpoint_every") {
    c.checkpoint_every = to_int(key, value);
  } else if (key == "out_dir") {
    c.out_dir = value;
  } else if (key == "problem") {
    c.problems.push_back(parse_problem(value));
  } else if (key == "trial_seeds") {
    c.trial_seeds.clear();
    for (const std::string& s : split_list(value, ','))
      c.trial_seeds.push_back(to_u64(key, s));
    if (c.trial_seeds.empty()) throw Error("config: trial_seeds must not be empty");
  } else if (key == "noise_levels") {
    c.noise_levels.clear();
    for (const std::string& s : split_list(value, ','))
      c.noise_levels.push_back(to_double(key, s));
    if (c.noise_levels.empty()) throw Error("config: noise_levels must not be empty");
  } else {
    throw Error("config: unknown key '" + key + "'");
  }
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open '" + path + "'");
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw Error("config: '" + path + "' line " + std::to_string(line_no) +
                  ": expected 'key = value'");
    apply_override(cfg, t.substr(0, eq), t.substr(eq + 1));
  }
  return cfg;
}

void apply_env_overrides(RunConfig& cfg) {
  static const char* keys[] = {
      "seed",   "threads",     "epochs", "batch",    "alpha",
      "noise",  "time_limit_s", "out_dir", "reward",  "policy",
      "epsilon", "beta",        "lambda", "entropy_coef", "learning_rate"};
  for (const char* key : keys) {
    std::string env = "SYMREG_";
    for (const char* p = key; *p; ++p)
      env += static_cast<char>(std::toupper(static_cast<unsigned char>(*p)));
    if (const char* value = std::getenv(env.c_str()))
      apply_override(cfg, key, value);
  }
}

std::string dump_config(const RunConfig& c) {
  std::ostringstream out;
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
  };
  out << "config_version = " << c.config_version << "\n";
  out << "unary = " << join(c.unary) << "\n";
  out << "binary = " << join(c.binary) << "\n";
  out << "use_constant = " << (c.use_constant ? "true" : "false") << "\n";
  out << "use_literal_one = " << (c.use_literal_one ? "true" : "false") << "\n";
  out << "embed_dim = " << c.embed_dim << "\n";
  out << "decoder_layers = " << c.decoder_layers << "\n";
  out << "encoder_layers = " << c.encoder_layers << "\n";
  out << "heads = " << c.heads << "\n";
  out << "ff_size = " << c.ff_size << "\n";
  out << "dct_clip = " << c.dct_clip << "\n";
  out << "batch = " << c.batch << "\n";
  out << "oversampling = " << c.oversampling << "\n";
  out << "max_nodes = " << c.max_nodes << "\n";
  out << "alpha = " << c.alpha << "\n";
  out << "lambda = " << c.lambda << "\n";
  out << "entropy_coef = " << c.entropy_coef << "\n";
  out << "beta = " << c.beta << "\n";
  out << "epsilon = " << c.epsilon << "\n";
  out << "learning_rate = " << c.learning_rate << "\n";
  out << "epochs = " << c.epochs << "\n";
  out << "steps_per_epoch = " << c.steps_per_epoch << "\n";
  out << "epochs_per_ref = " << c.epochs_per_ref << "\n";
  out << "reward = " << c.reward << "\n";
  out << "policy = " << c.policy << "\n";
  out << "spl_eta = " << c.spl_eta << "\n";
  out << "tpsr_lambda = " << c.tpsr_lambda << "\n";
  out << "lm_max_iterations = " << c.lm_max_iterations << "\n";
  out << "lm_initial_damping = " << c.lm_initial_damping << "\n";
  out << "seed = " << c.seed << "\n";
  out << "threads = " << c.threads << "\n";
  out << "noise = " << c.noise << "\n";
  out << "time_limit_s = " << c.time_limit_s << "\n";
  out << "train_fraction = " << c.train_fraction << "\n";
  out << "checkpoint_every = " << c.checkpoint_every << "\n";
  out << "out_dir = " << c.out_dir << "\n";
  for (const auto& p : c.problems)
    out << "problem = " << p.name << " ; " << p.target << " ; " << p.lo << " ; "
        << p.hi << " ; " << p.train_points << " ; " << p.test_points << "\n";
  {
    out << "trial_seeds = ";
    for (std::size_t i = 0; i < c.trial_seeds.size(); ++i)
      out << (i ? "," : "") << c.trial_seeds[i];
    out << "\n";
    out << "noise_levels = ";
    for (std::size_t i = 0; i < c.noise_levels.size(); ++i)
      out << (i ? "," : "") << c.noise_levels[i];
    out << "\n";
  }
  return out.str();
}

TokenLibrary RunConfig::make_library(int variable_count) const {
  return TokenLibrary::build(variable_count, unary, binary, use_constant,
                             use_literal_one);
}

ModelConfig RunConfig::make_model_config(int vocab) const {
  ModelConfig mc;
  mc.vocab = vocab;
  mc.embed_dim = embed_dim;
  mc.layers = decoder_layers;
  mc.heads = heads;
  mc.ff_dim = ff_size;
  mc.dct_clip = dct_clip;
  return mc;
}

SampleConfig RunConfig::make_sample_config() const {
  SampleConfig sc;
  sc.batch = batch;
  sc.oversampling = oversampling;
  sc.max_nodes = max_nodes;
  sc.threads = threads;
  return sc;
}

PolicyConfig RunConfig::make_policy_config() const {
  PolicyConfig pc;
  pc.alpha = alpha;
  pc.lambda = lambda;
  pc.entropy_coef = entropy_coef;
  pc.beta = beta;
  pc.epsilon = epsilon;
  pc.learning_rate = learning_rate;
  pc.epochs = epochs;
  pc.steps_per_epoch = steps_per_epoch;
  pc.epochs_per_ref = epochs_per_ref;
  pc.reward = reward == "bic"     ? RewardKind::Bic
              : reward == "nrmse" ? RewardKind::Nrmse
              : reward == "spl"   ? RewardKind::Spl
                                  : RewardKind::Tpsr;
  pc.policy = policy == "grpo"   ? PolicyKind::Grpo
              : policy == "rank" ? PolicyKind::RankMapped
                                 : PolicyKind::BaselineRisk;
  pc.spl_eta = spl_eta;
  pc.tpsr_lambda = tpsr_lambda;
  pc.time_limit_s = time_limit_s;
  pc.checkpoint_every = checkpoint_every;
  return pc;
}

LMConfig RunConfig::make_lm_config() const {
  LMConfig lc;
  lc.max_iterations = lm_max_iterations;
  lc.initial_damping = lm_initial_damping;
  return lc;
}

}  // namespace symreg
