#include "symreg/eval.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace symreg {

namespace {

double apply_unary(OpCode op, double a) {
  switch (op) {
    case OpCode::Sin: return std::sin(a);
    case OpCode::Cos: return std::cos(a);
    case OpCode::Log: return a > 0.0 ? std::log(a) : std::numeric_limits<double>::quiet_NaN();
    case OpCode::Sqrt: return a >= 0.0 ? std::sqrt(a) : std::numeric_limits<double>::quiet_NaN();
    case OpCode::Exp: return std::exp(a);
    case OpCode::Tan: return std::tan(a);
    case OpCode::Square: return a * a;
    default: return std::numeric_limits<double>::quiet_NaN();
  }
}

double apply_binary(OpCode op, double a, double b) {
  switch (op) {
    case OpCode::Add: return a + b;
    case OpCode::Sub: return a - b;
    case OpCode::Mul: return a * b;
    case OpCode::Div: return b != 0.0 ? a / b : std::numeric_limits<double>::quiet_NaN();
    // Real-valued power: IEEE pow already yields NaN for a negative base with
    // a non-integer exponent and +/-inf for 0 with a negative exponent; both
    // are treated as poisoned rows downstream.
    case OpCode::Pow: return std::pow(a, b);
    default: return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

EvalResult evaluate(const TokenLibrary& lib, const Expression& expr,
                    const Eigen::MatrixXd& X) {
  const ExprTree& tree = expr.tree;
  if (!tree.complete) throw UsageError("evaluate: expression tree is incomplete");
  const int n = tree.node_count();
  const Eigen::Index S = X.rows();

  if (count_constants(lib, tree) != static_cast<int>(expr.constants.size()))
    throw UsageError("evaluate: constants length does not match constant-token count");

  // Children indices per node (BFS order: children come after the parent).
  std::vector<int> left(n, -1), right(n, -1);
  for (int i = 1; i < n; ++i) {
    const ExprNode& node = tree.nodes[i];
    (node.slot == ChildSlot::Left ? left : right)[node.parent] = i;
  }

  // BFS-ordered constant assignment.
  std::vector<int> const_slot(n, -1);
  int next_const = 0;
  for (int i = 0; i < n; ++i)
    if (lib[tree.nodes[i].token_id].kind == TokenKind::Constant)
      const_slot[i] = next_const++;

  std::vector<Eigen::VectorXd> value(n);
  for (int i = n - 1; i >= 0; --i) {
    const Token& tok = lib[tree.nodes[i].token_id];
    switch (tok.kind) {
      case TokenKind::Variable:
        if (tok.var_index >= X.cols())
          throw UsageError("evaluate: variable " + tok.symbol + " beyond input columns");
        value[i] = X.col(tok.var_index);
        break;
      case TokenKind::Constant:
        value[i] = Eigen::VectorXd::Constant(S, expr.constants[const_slot[i]]);
        break;
      case TokenKind::LiteralOne:
        value[i] = Eigen::VectorXd::Ones(S);
        break;
      case TokenKind::Unary: {
        const Eigen::VectorXd& a = value[left[i]];
        Eigen::VectorXd out(S);
        for (Eigen::Index s = 0; s < S; ++s) out[s] = apply_unary(tok.op, a[s]);
        value[i] = std::move(out);
        break;
      }
      case TokenKind::Binary: {
        const Eigen::VectorXd& a = value[left[i]];
        const Eigen::VectorXd& b = value[right[i]];
        Eigen::VectorXd out(S);
        for (Eigen::Index s = 0; s < S; ++s) out[s] = apply_binary(tok.op, a[s], b[s]);
        value[i] = std::move(out);
        break;
      }
    }
  }

  EvalResult result;
  result.values = std::move(value[0]);
  result.valid = true;
  for (Eigen::Index s = 0; s < S; ++s) {
    if (!std::isfinite(result.values[s])) {
      result.values[s] = std::numeric_limits<double>::quiet_NaN();
      result.valid = false;
    }
  }
  return result;
}

Eigen::MatrixXd quasi_random_points(const Eigen::VectorXd& lo,
                                    const Eigen::VectorXd& hi, int n_points) {
  if (lo.size() != hi.size()) throw UsageError("quasi_random_points: box dims differ");
  static constexpr int primes[] = {2,  3,  5,  7,  11, 13, 17, 19,
                                   23, 29, 31, 37, 41, 43, 47, 53};
  const int dims = static_cast<int>(lo.size());
  if (dims > static_cast<int>(std::size(primes)))
    throw UsageError("quasi_random_points: too many dimensions");
  Eigen::MatrixXd X(n_points, dims);
  for (int d = 0; d < dims; ++d) {
    const int base = primes[d];
    for (int i = 0; i < n_points; ++i) {
      // radical inverse of (i+1) in the given base
      double f = 1.0, u = 0.0;
      for (int k = i + 1; k > 0; k /= base) {
        f /= base;
        u += f * (k % base);
      }
      X(i, d) = lo[d] + (hi[d] - lo[d]) * u;
    }
  }
  return X;
}

bool numeric_equiv(const TokenLibrary& lib, const Expression& candidate,
                   const Expression& target, const Eigen::VectorXd& lo,
                   const Eigen::VectorXd& hi, int n_points) {
  Eigen::MatrixXd X = quasi_random_points(lo, hi, n_points);
  EvalResult c = evaluate(lib, candidate, X);
  EvalResult t = evaluate(lib, target, X);

  int poisoned = 0;
  double max_dev = 0.0, max_target = 0.0;
  for (int i = 0; i < n_points; ++i) {
    if (std::isnan(c.values[i]) || std::isnan(t.values[i])) {
      ++poisoned;
      continue;
    }
    max_dev = std::max(max_dev, std::abs(c.values[i] - t.values[i]));
    max_target = std::max(max_target, std::abs(t.values[i]));
  }
  if (poisoned * 10 > n_points) return false;
  return max_dev <= 1e-9 * (1.0 + max_target);
}

}  // namespace symreg
