#include <doctest.h>

#include <set>

#include "helpers.hpp"

using namespace symreg;
using namespace testutil;

TEST_SUITE_BEGIN("sampler");

TEST_CASE("mask rules") {
  TokenLibrary lib =
      TokenLibrary::build(1, {"sin", "cos", "log", "sqrt", "exp"},
                          {"add", "sub", "mul", "div", "pow"}, true, true);
  SampleConfig cfg;
  cfg.max_nodes = 32;
  auto allowed = [&](std::uint64_t mask, const char* sym) {
    return ((mask >> *lib.find(sym)) & 1u) != 0;
  };

  SUBCASE("root: bare constants rejected, variables allowed") {
    MaskContext root;
    root.max_nodes = 32;
    std::uint64_t mask = legal_token_mask(lib, cfg, root);
    CHECK_FALSE(allowed(mask, "c"));
    CHECK_FALSE(allowed(mask, "1"));
    CHECK(allowed(mask, "x1"));
    CHECK(allowed(mask, "+"));
  }

  SUBCASE("a unary token may not be its own direct child") {
    MaskContext ctx;
    ctx.parent_token = *lib.find("sin");
    ctx.depth = 2;
    ctx.node_count = 1;
    ctx.open_slots = 1;
    ctx.max_nodes = 32;
    std::uint64_t mask = legal_token_mask(lib, cfg, ctx);
    CHECK_FALSE(allowed(mask, "sin"));
    CHECK(allowed(mask, "cos"));
    CHECK(allowed(mask, "x1"));
  }

  SUBCASE("inverse pairs masked under the parent") {
    MaskContext ctx;
    ctx.parent_token = *lib.find("log");
    ctx.depth = 2;
    ctx.node_count = 1;
    ctx.open_slots = 1;
    ctx.max_nodes = 32;
    std::uint64_t mask = legal_token_mask(lib, cfg, ctx);
    CHECK_FALSE(allowed(mask, "exp"));
    CHECK_FALSE(allowed(mask, "log"));  // also its own child
    CHECK(allowed(mask, "sqrt"));
  }

  SUBCASE("budget: one remaining node forces arity zero") {
    MaskContext ctx;
    ctx.parent_token = *lib.find("+");
    ctx.node_count = 31;
    ctx.open_slots = 1;
    ctx.max_nodes = 32;
    std::uint64_t mask = legal_token_mask(lib, cfg, ctx);
    CHECK(allowed(mask, "x1"));
    CHECK(allowed(mask, "c"));
    CHECK_FALSE(allowed(mask, "sin"));
    CHECK_FALSE(allowed(mask, "+"));
  }

  SUBCASE("an operator's children cannot all be constant-kind") {
    MaskContext unary_child;
    unary_child.parent_token = *lib.find("sqrt");
    unary_child.depth = 2;
    unary_child.node_count = 1;
    unary_child.open_slots = 1;
    unary_child.max_nodes = 32;
    std::uint64_t mask = legal_token_mask(lib, cfg, unary_child);
    CHECK_FALSE(allowed(mask, "c"));
    CHECK_FALSE(allowed(mask, "1"));

    MaskContext right;
    right.parent_token = *lib.find("*");
    right.sibling_token = *lib.find("c");
    right.depth = 2;
    right.node_count = 2;
    right.open_slots = 1;
    right.max_nodes = 32;
    mask = legal_token_mask(lib, cfg, right);
    CHECK_FALSE(allowed(mask, "c"));
    CHECK_FALSE(allowed(mask, "1"));
    CHECK(allowed(mask, "x1"));

    right.sibling_token = *lib.find("x1");
    mask = legal_token_mask(lib, cfg, right);
    CHECK(allowed(mask, "c"));
  }

  SUBCASE("rules are toggleable") {
    SampleConfig open_cfg;
    open_cfg.rule_min_size = false;
    MaskContext root;
    root.max_nodes = 32;
    std::uint64_t mask = legal_token_mask(lib, open_cfg, root);
    CHECK(allowed(mask, "c"));
  }
}

TEST_CASE("single-token vocabulary fills the batch with duplicates") {
  TokenLibrary lib = TokenLibrary::build(1, {}, {"add"}, false, false);
  // {x1, +}: with max_nodes 1 every tree is the bare variable
  Model model(tiny_model_config(lib.size()));
  Eigen::VectorXd theta = model.init_params(0);
  SampleConfig cfg;
  cfg.batch = 16;
  cfg.oversampling = 2.0;
  cfg.max_nodes = 1;
  std::vector<Trajectory> batch = sample_batch(model, lib, theta, cfg, 3);
  CHECK(batch.size() == 16);
  for (const Trajectory& t : batch) {
    CHECK(t.length() == 1);
    CHECK(lib[t.tokens[0]].kind == TokenKind::Variable);
  }
}

TEST_CASE("batches are complete, budgeted, rule-clean, and deterministic") {
  TokenLibrary lib =
      TokenLibrary::build(2, {"sin", "cos", "log", "exp"},
                          {"add", "sub", "mul", "div"}, true, true);
  Model model(tiny_model_config(lib.size()));
  Eigen::VectorXd theta = model.init_params(77);
  SampleConfig cfg;
  cfg.batch = 64;
  cfg.oversampling = 2.0;
  cfg.max_nodes = 12;

  std::vector<Trajectory> a = sample_batch(model, lib, theta, cfg, 42);
  std::vector<Trajectory> b = sample_batch(model, lib, theta, cfg, 42);
  SampleConfig cfg4 = cfg;
  cfg4.threads = 4;
  std::vector<Trajectory> c = sample_batch(model, lib, theta, cfg4, 42);

  REQUIRE(a.size() == 64);
  REQUIRE(b.size() == a.size());
  REQUIRE(c.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].tokens == b[i].tokens);
    CHECK(a[i].tokens == c[i].tokens);
    CHECK(a[i].masks == b[i].masks);
    CHECK((a[i].step_logprob - b[i].step_logprob).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a[i].step_logprob - c[i].step_logprob).cwiseAbs().maxCoeff() == 0.0);
  }

  for (const Trajectory& t : a) {
    CHECK(t.tree.complete);
    CHECK(t.tree.node_count() <= cfg.max_nodes);
    // rule scan over the finished tree
    std::vector<int> left_child(t.tree.node_count(), -1);
    for (int i = 1; i < t.tree.node_count(); ++i)
      if (t.tree.nodes[i].slot == ChildSlot::Left)
        left_child[t.tree.nodes[i].parent] = i;
    const ExprNode& root = t.tree.nodes[0];
    CHECK_FALSE(is_constant_kind(lib[root.token_id].kind));
    for (int i = 1; i < t.tree.node_count(); ++i) {
      const Token& tok = lib[t.tree.nodes[i].token_id];
      const Token& parent = lib[t.tree.nodes[t.tree.nodes[i].parent].token_id];
      if (parent.kind == TokenKind::Unary) {
        CHECK(tok.id != parent.id);
        CHECK_FALSE(is_constant_kind(tok.kind));
        bool inverse = (parent.op == OpCode::Log && tok.op == OpCode::Exp) ||
                       (parent.op == OpCode::Exp && tok.op == OpCode::Log);
        CHECK_FALSE(inverse);
      }
      if (parent.kind == TokenKind::Binary && t.tree.nodes[i].slot == ChildSlot::Right) {
        int sib = left_child[t.tree.nodes[i].parent];
        if (sib >= 0 && is_constant_kind(lib[t.tree.nodes[sib].token_id].kind))
          CHECK_FALSE(is_constant_kind(tok.kind));
      }
    }
  }
}

TEST_CASE("stored log-probabilities replay bitwise") {
  TokenLibrary lib = tiny_lib();
  Model model(tiny_model_config(lib.size()));
  Eigen::VectorXd theta = model.init_params(13);
  SampleConfig cfg = tiny_sample_config(24, 8);
  std::vector<Trajectory> batch = sample_batch(model, lib, theta, cfg, 99);
  for (const Trajectory& t : batch) {
    LogProbResult lp = log_prob(model, lib, t, theta);
    REQUIRE(lp.per_token.size() == t.step_logprob.size());
    for (int j = 0; j < t.length(); ++j)
      CHECK(lp.per_token[j] == t.step_logprob[j]);  // bitwise
    CHECK(lp.total == t.step_logprob.sum());
  }

  // tampering with a mask so the chosen token is illegal trips the contract
  Trajectory bad = batch.front();
  bad.masks[0] &= ~(std::uint64_t(1) << bad.tokens[0]);
  if (bad.masks[0] != 0) {
    CHECK_THROWS_AS(log_prob(model, lib, bad, theta), ContractViolation);
  }
}

TEST_CASE("categorical sampling matches its distribution") {
  Eigen::VectorXd logits(4);
  logits << 0.5, -0.25, 1.5, 0.0;
  std::uint64_t mask = 0b1111;
  Eigen::VectorXd lp = masked_log_softmax(logits, mask);
  Eigen::VectorXd p = lp.array().exp();

  Rng rng(2718);
  const int draws = 100000;
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(4);
  for (int i = 0; i < draws; ++i) counts[sample_categorical(lp, rng)] += 1.0;
  for (int i = 0; i < 4; ++i) {
    double expect = draws * p[i];
    double sigma = std::sqrt(draws * p[i] * (1.0 - p[i]));
    CHECK(std::abs(counts[i] - expect) < 3.0 * sigma);
  }
}

TEST_CASE("oversampling yields a mostly unique batch at random init") {
  // no-constant vocabulary over one variable
  TokenLibrary lib = TokenLibrary::build(
      1, {"sin", "cos", "exp", "log"}, {"add", "sub", "mul", "div"}, false, false);
  ModelConfig mc;
  mc.vocab = lib.size();
  mc.embed_dim = 8;
  mc.layers = 1;
  mc.heads = 1;
  mc.ff_dim = 16;
  mc.dct_clip = 8;
  SampleConfig cfg;
  cfg.batch = 1000;
  cfg.oversampling = 2.0;
  cfg.max_nodes = 32;

  int failures = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Model model(mc);
    Eigen::VectorXd theta = model.init_params(seed * 31 + 7);
    std::vector<Trajectory> batch = sample_batch(model, lib, theta, cfg, seed);
    std::set<std::vector<int>> uniq;
    for (const Trajectory& t : batch) uniq.insert(t.tokens);
    if (static_cast<int>(uniq.size()) < cfg.batch) ++failures;
  }
  CHECK(failures <= 1);
}

TEST_SUITE_END();
