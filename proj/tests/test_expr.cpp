#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "symreg/dpe.hpp"
#include "symreg/eval.hpp"
#include "symreg/infix.hpp"
#include "symreg/rng.hpp"

using namespace symreg;

namespace {

TokenLibrary standard_lib(int vars = 2) {
  return TokenLibrary::build(vars, {"sin", "cos", "log", "sqrt", "exp"},
                             {"add", "sub", "mul", "div", "pow"}, true, true);
}

// All complete BFS arity sequences with depth capped at `max_depth`.
// Each sequence is one tree shape over tokens of arity 0/1/2.
void enumerate_shapes(std::vector<std::vector<int>>& out, std::vector<int>& arities,
                      std::vector<int>& pending_depths, int max_depth) {
  if (pending_depths.empty()) {
    out.push_back(arities);
    return;
  }
  int depth = pending_depths.front();
  pending_depths.erase(pending_depths.begin());
  for (int arity = 0; arity <= 2; ++arity) {
    if (depth == max_depth && arity > 0) continue;
    arities.push_back(arity);
    for (int c = 0; c < arity; ++c) pending_depths.push_back(depth + 1);
    enumerate_shapes(out, arities, pending_depths, max_depth);
    for (int c = 0; c < arity; ++c) pending_depths.pop_back();
    arities.pop_back();
  }
  pending_depths.insert(pending_depths.begin(), depth);
}

ExprTree tree_from_arities(const TokenLibrary& lib, const std::vector<int>& arities) {
  int leaf = *lib.find("x1");
  int unary = *lib.find("sin");
  int binary = *lib.find("+");
  std::vector<int> tokens;
  for (int a : arities) tokens.push_back(a == 0 ? leaf : a == 1 ? unary : binary);
  return ExprTree::from_tokens(tokens, lib);
}

// Random complete tree over the library, budget-limited.
Expression random_expression(const TokenLibrary& lib, Rng& rng, int max_nodes) {
  BfsBuilder b(lib);
  while (!(b.started() && b.complete())) {
    std::vector<int> legal;
    int open = b.started() ? b.open_slots() : 1;
    for (int i = 0; i < lib.size(); ++i)
      if (b.node_count() + open + lib[i].arity <= max_nodes) legal.push_back(i);
    b.push(legal[rng.next_u64() % legal.size()]);
  }
  Expression e;
  e.tree = b.take();
  int nc = count_constants(lib, e.tree);
  for (int i = 0; i < nc; ++i)
    e.constants.push_back(rng.next_normal() * 3.0 + 0.5);
  return e;
}

}  // namespace

TEST_SUITE_BEGIN("expr");

TEST_CASE("token library invariants") {
  CHECK_THROWS_AS(TokenLibrary::build(0, {"sin"}, {"add"}, true, true), UsageError);
  CHECK_THROWS_AS(TokenLibrary::build(1, {}, {}, true, true), UsageError);
  std::vector<Token> dup = {
      {-1, TokenKind::Binary, 2, OpCode::Add, -1, "+"},
      {-1, TokenKind::Variable, 0, OpCode::Var, 0, "x1"},
      {-1, TokenKind::Constant, 0, OpCode::Const, -1, "c"},
      {-1, TokenKind::Constant, 0, OpCode::Const, -1, "c2"},
  };
  CHECK_THROWS_AS(TokenLibrary(dup, 1), UsageError);
  std::vector<Token> bad_arity = {
      {-1, TokenKind::Binary, 1, OpCode::Add, -1, "+"},
      {-1, TokenKind::Variable, 0, OpCode::Var, 0, "x1"},
  };
  CHECK_THROWS_AS(TokenLibrary(bad_arity, 1), UsageError);

  TokenLibrary lib = standard_lib();
  CHECK(lib.size() == 14);
  CHECK(lib[*lib.find("+")].arity == 2);
  CHECK(lib[*lib.find("sin")].arity == 1);
  CHECK(lib.constant_id() >= 0);
  CHECK(lib.one_id() >= 0);
}

TEST_CASE("positions: root and first levels") {
  TokenLibrary lib = standard_lib();
  // root only
  ExprTree t1 = ExprTree::from_tokens(std::vector<int>{*lib.find("x1")}, lib);
  CHECK(t1.nodes[0].depth == 1);
  CHECK(t1.nodes[0].horizontal == 0.5);

  // root with two children: left (2, 1/4), right (2, 3/4)
  ExprTree t2 = ExprTree::from_tokens(
      std::vector<int>{*lib.find("+"), *lib.find("x1"), *lib.find("x2")}, lib);
  CHECK(t2.nodes[1].depth == 2);
  CHECK(t2.nodes[1].horizontal == 0.25);
  CHECK(t2.nodes[2].horizontal == 0.75);

  // left-left grandchild of the root: (3, 1/8) = 1/4 - 1/2^3
  ExprTree t3 = ExprTree::from_tokens(
      std::vector<int>{*lib.find("+"), *lib.find("+"), *lib.find("x2"),
                       *lib.find("x1"), *lib.find("x2")},
      lib);
  CHECK(t3.nodes[3].depth == 3);
  CHECK(t3.nodes[3].horizontal == 0.125);
}

TEST_CASE("assign_positions matches incremental construction and validates") {
  TokenLibrary lib = standard_lib();
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Expression e = random_expression(lib, rng, 24);
    ExprTree scrubbed = e.tree;
    for (auto& n : scrubbed.nodes) {
      n.depth = 0;
      n.horizontal = -1;
    }
    assign_positions(scrubbed, lib);
    for (int i = 0; i < scrubbed.node_count(); ++i) {
      CHECK(scrubbed.nodes[i].depth == e.tree.nodes[i].depth);
      CHECK(scrubbed.nodes[i].horizontal == e.tree.nodes[i].horizontal);
    }
  }

  ExprTree bad;
  bad.nodes.push_back({*lib.find("+"), -1, ChildSlot::Root, 0, 0});
  bad.nodes.push_back({*lib.find("x1"), 5, ChildSlot::Left, 0, 0});
  CHECK_THROWS_AS(assign_positions(bad, lib), StructuralError);
}

TEST_CASE("positions: exhaustive shape enumeration to depth 5") {
  TokenLibrary lib = standard_lib();
  std::vector<std::vector<int>> shapes;
  std::vector<int> arities;
  std::vector<int> pending{1};
  enumerate_shapes(shapes, arities, pending, 5);
  CHECK(shapes.size() > 30000);

  for (const auto& shape : shapes) {
    ExprTree t = tree_from_arities(lib, shape);
    std::map<int, double> last_at_level;
    for (const ExprNode& n : t.nodes) {
      CHECK(n.horizontal > 0.0);
      CHECK(n.horizontal < 1.0);
      auto it = last_at_level.find(n.depth);
      if (it != last_at_level.end()) CHECK(n.horizontal > it->second);
      last_at_level[n.depth] = n.horizontal;
      if (n.parent >= 0) {
        const ExprNode& p = t.nodes[n.parent];
        if (n.slot == ChildSlot::Left) CHECK(n.horizontal < p.horizontal);
        if (n.slot == ChildSlot::Right) CHECK(n.horizontal > p.horizontal);
      }
    }
  }
}

TEST_CASE("dpe encoding") {
  // direct evaluation of the four formulas at (d=1, h=1/2, D=2)
  Eigen::VectorXd v = dpe_encode(1.0, 0.5, 2);
  CHECK(v.size() == 4);
  CHECK(v[0] == doctest::Approx(std::sin(1.0)));
  CHECK(v[1] == doctest::Approx(std::cos(1.0)));
  CHECK(v[2] == doctest::Approx(std::sin(0.5)));
  CHECK(v[3] == doctest::Approx(std::cos(0.5)));
  CHECK(v[0] == doctest::Approx(0.8415).epsilon(1e-4));
  CHECK(v[1] == doctest::Approx(0.5403).epsilon(1e-4));
  CHECK(v[2] == doctest::Approx(0.4794).epsilon(1e-4));
  CHECK(v[3] == doctest::Approx(0.8776).epsilon(1e-4));

  Eigen::VectorXd z = dpe_encode(0.0, 0.0, 2);
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 1.0);
  CHECK(z[2] == 0.0);
  CHECK(z[3] == 1.0);

  // each (sin, cos) pair lies on the unit circle
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    double d = 1 + (rng.next_u64() % 30);
    double h = rng.next_double();
    int D = 2 * (1 + static_cast<int>(rng.next_u64() % 6));
    Eigen::VectorXd enc = dpe_encode(d, h, D);
    CHECK(enc.size() == 2 * D);
    CHECK(enc.minCoeff() >= -1.0);
    CHECK(enc.maxCoeff() <= 1.0);
    for (int i = 0; 2 * i + 1 < D; ++i) {
      CHECK(enc[2 * i] * enc[2 * i] + enc[2 * i + 1] * enc[2 * i + 1] ==
            doctest::Approx(1.0).epsilon(1e-12));
      CHECK(enc[D + 2 * i] * enc[D + 2 * i] + enc[D + 2 * i + 1] * enc[D + 2 * i + 1] ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(dpe_encode(1, 0.5, 3), UsageError);
  CHECK_THROWS_AS(dpe_encode(1, 0.5, 0), UsageError);

  // width-r row: exact when r % 4 == 0, truncated halves otherwise
  Eigen::VectorXd w8 = position_embedding(2.0, 0.25, 8);
  CHECK(w8.size() == 8);
  CHECK((w8 - dpe_encode(2.0, 0.25, 4)).norm() == 0.0);
  Eigen::VectorXd w10 = position_embedding(2.0, 0.25, 10);
  Eigen::VectorXd full = dpe_encode(2.0, 0.25, 6);
  CHECK(w10.size() == 10);
  CHECK((w10.head(5) - full.head(5)).norm() == 0.0);
  CHECK((w10.tail(5) - full.segment(6, 5)).norm() == 0.0);
}

TEST_CASE("evaluate: basic semantics and poisoning") {
  TokenLibrary lib = standard_lib();
  Eigen::MatrixXd X(1, 2);
  X << 1.0, 0.0;

  Expression e1 = parse_infix("x1 + sin(x2)", lib);
  EvalResult r1 = evaluate(lib, e1, X);
  CHECK(r1.valid);
  CHECK(r1.values[0] == 1.0);

  Expression e2 = parse_infix("2.5*x1", lib);
  Eigen::MatrixXd X2(1, 2);
  X2 << 2.0, 0.0;
  EvalResult r2 = evaluate(lib, e2, X2);
  CHECK(r2.values[0] == 5.0);

  Expression e3 = parse_infix("1/x1", lib);
  Eigen::MatrixXd X3(1, 2);
  X3 << 0.0, 0.0;
  EvalResult r3 = evaluate(lib, e3, X3);
  CHECK_FALSE(r3.valid);
  CHECK(std::isnan(r3.values[0]));

  // domain violations: log of non-positive, sqrt of negative, 0^negative
  Eigen::MatrixXd Xn(1, 2);
  Xn << -1.0, 0.0;
  CHECK_FALSE(evaluate(lib, parse_infix("log(x1)", lib), Xn).valid);
  CHECK_FALSE(evaluate(lib, parse_infix("sqrt(x1)", lib), Xn).valid);
  Eigen::MatrixXd Xz(1, 2);
  Xz << 0.0, 0.0;
  CHECK_FALSE(evaluate(lib, parse_infix("x1^(0 - 1)", lib), Xz).valid);
  // negative base with integer exponent stays real
  Eigen::MatrixXd Xm(1, 2);
  Xm << -2.0, 0.0;
  EvalResult rp = evaluate(lib, parse_infix("x1^2.0", lib), Xm);
  CHECK(rp.valid);
  CHECK(rp.values[0] == 4.0);
  // non-integer exponent of a negative base poisons
  CHECK_FALSE(evaluate(lib, parse_infix("x1^0.5", lib), Xm).valid);

  // purity: bitwise identical on repeat
  Rng rng(11);
  Eigen::MatrixXd Xr(16, 2);
  for (int i = 0; i < Xr.size(); ++i) Xr.data()[i] = rng.next_normal();
  Expression er = parse_infix("sin(x1)*cos(x2) + x1/x2", lib);
  EvalResult a = evaluate(lib, er, Xr);
  EvalResult b = evaluate(lib, er, Xr);
  for (int i = 0; i < a.values.size(); ++i) {
    if (std::isnan(a.values[i]))
      CHECK(std::isnan(b.values[i]));
    else
      CHECK(a.values[i] == b.values[i]);
  }

  CHECK_THROWS_AS(evaluate(lib, Expression{ExprTree{}, {}}, X), UsageError);
}

TEST_CASE("complexity") {
  TokenLibrary lib = standard_lib();
  Expression single = parse_infix("x1", lib);
  CHECK(complexity(lib, single) == 1);

  Expression cx = parse_infix("c*x1", lib);  // 3 nodes, 1 constant
  CHECK(complexity(lib, cx) == 4);

  // x1^c + sin(x2): 6 nodes, 1 constant
  Expression fig = parse_infix("x1^c + sin(x2)", lib);
  CHECK(fig.tree.node_count() == 6);
  CHECK(complexity(lib, fig) == 7);

  // complexity >= node count, equality iff no constant tokens
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Expression e = random_expression(lib, rng, 20);
    int k = complexity(lib, e);
    CHECK(k >= e.tree.node_count());
    CHECK((k == e.tree.node_count()) == (count_constants(lib, e.tree) == 0));
  }
}

TEST_CASE("infix printing and parsing") {
  TokenLibrary lib = standard_lib();
  Expression fig = parse_infix("x1^c + sin(x2)", lib);
  CHECK(to_infix(lib, fig, true) == "x1^c + sin(x2)");

  Expression x = parse_infix("x1", lib);
  CHECK(x.tree.node_count() == 1);
  CHECK(lib[x.tree.nodes[0].token_id].kind == TokenKind::Variable);

  // structure-preserving parentheses
  Expression assoc = parse_infix("x1 - (x2 - 1)", lib);
  CHECK(to_infix(lib, assoc, true) == "x1 - (x2 - 1)");
  Expression assoc2 = parse_infix("(x1 - x2) - 1", lib);
  CHECK(to_infix(lib, assoc2, true) == "x1 - x2 - 1");

  CHECK_THROWS_AS(parse_infix("x1 + ", lib), ParseError);
  CHECK_THROWS_AS(parse_infix("bogus(x1)", lib), ParseError);
  CHECK_THROWS_AS(parse_infix("x1 + x9", lib), ParseError);
  try {
    parse_infix("x1 + )", lib);
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.position == 5);
  }

  // literal one maps to the dedicated token; other numbers to the constant
  Expression one = parse_infix("x1 + 1", lib);
  CHECK(lib[one.tree.nodes[2].token_id].kind == TokenKind::LiteralOne);
  Expression c2 = parse_infix("x1 + 1.0", lib);
  CHECK(lib[c2.tree.nodes[2].token_id].kind == TokenKind::Constant);
  CHECK(c2.constants[0] == 1.0);
}

TEST_CASE("infix round trip on random trees") {
  TokenLibrary lib = standard_lib();
  Rng rng(12345);
  for (int trial = 0; trial < 1000; ++trial) {
    Expression e = random_expression(lib, rng, 24);
    std::string text = to_infix(lib, e);
    Expression back = parse_infix(text, lib);
    REQUIRE(back.tree.node_count() == e.tree.node_count());
    for (int i = 0; i < e.tree.node_count(); ++i)
      CHECK(back.tree.nodes[i].token_id == e.tree.nodes[i].token_id);
    REQUIRE(back.constants.size() == e.constants.size());
    for (std::size_t i = 0; i < e.constants.size(); ++i)
      CHECK(back.constants[i] == e.constants[i]);  // 17 significant digits
  }
}

TEST_CASE("numeric equivalence oracle") {
  TokenLibrary lib = standard_lib(1);
  Eigen::VectorXd lo(1), hi(1);
  lo << -2.0;
  hi << 2.0;

  CHECK(numeric_equiv(lib, parse_infix("x1 + x1", lib), parse_infix("2.0*x1", lib),
                      lo, hi, 256));
  CHECK_FALSE(numeric_equiv(lib, parse_infix("x1*x1", lib),
                            parse_infix("x1*x1 + 0.001", lib), lo, hi, 256));
  CHECK(numeric_equiv(lib, parse_infix("sin(x1)*cos(x1)", lib),
                      parse_infix("sin(2.0*x1)/2.0", lib), lo, hi, 256));

  // heavy poisoning on the domain reports false
  CHECK_FALSE(numeric_equiv(lib, parse_infix("log(x1)", lib),
                            parse_infix("log(x1)", lib), lo, hi, 256));
  // identical but valid expressions report true
  CHECK(numeric_equiv(lib, parse_infix("exp(x1)", lib), parse_infix("exp(x1)", lib),
                      lo, hi, 256));
}

TEST_SUITE_END();
