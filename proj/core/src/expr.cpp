#include "symreg/expr.hpp"

#include <algorithm>
#include <cmath>

namespace symreg {

TokenLibrary::TokenLibrary(std::vector<Token> tokens, int variable_count)
    : tokens_(std::move(tokens)), variable_count_(variable_count) {
  bool has_variable = false;
  bool has_operator = false;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    Token& t = tokens_[i];
    t.id = static_cast<int>(i);
    if (t.arity != arity_of(t.kind))
      throw UsageError("token '" + t.symbol + "': arity does not match kind");
    switch (t.kind) {
      case TokenKind::Variable:
        has_variable = true;
        if (t.var_index < 0 || t.var_index >= variable_count_)
          throw UsageError("token '" + t.symbol + "': variable index out of range");
        break;
      case TokenKind::Binary:
      case TokenKind::Unary:
        has_operator = true;
        break;
      case TokenKind::Constant:
        if (constant_id_ >= 0) throw UsageError("duplicate constant token");
        constant_id_ = t.id;
        break;
      case TokenKind::LiteralOne:
        if (one_id_ >= 0) throw UsageError("duplicate literal-one token");
        one_id_ = t.id;
        break;
    }
  }
  if (!has_variable) throw UsageError("token library needs at least one variable");
  if (!has_operator) throw UsageError("token library needs at least one operator");
}

std::optional<int> TokenLibrary::find(std::string_view symbol) const {
  for (const Token& t : tokens_)
    if (t.symbol == symbol) return t.id;
  return std::nullopt;
}

OpCode opcode_from_name(std::string_view name) {
  if (name == "add" || name == "+") return OpCode::Add;
  if (name == "sub" || name == "-") return OpCode::Sub;
  if (name == "mul" || name == "*") return OpCode::Mul;
  if (name == "div" || name == "/") return OpCode::Div;
  if (name == "pow" || name == "^") return OpCode::Pow;
  if (name == "sin") return OpCode::Sin;
  if (name == "cos") return OpCode::Cos;
  if (name == "log") return OpCode::Log;
  if (name == "sqrt") return OpCode::Sqrt;
  if (name == "exp") return OpCode::Exp;
  if (name == "tan") return OpCode::Tan;
  if (name == "square") return OpCode::Square;
  throw UsageError("unknown operator name: " + std::string(name));
}

namespace {

std::string print_symbol(OpCode op) {
  switch (op) {
    case OpCode::Add: return "+";
    case OpCode::Sub: return "-";
    case OpCode::Mul: return "*";
    case OpCode::Div: return "/";
    case OpCode::Pow: return "^";
    case OpCode::Sin: return "sin";
    case OpCode::Cos: return "cos";
    case OpCode::Log: return "log";
    case OpCode::Sqrt: return "sqrt";
    case OpCode::Exp: return "exp";
    case OpCode::Tan: return "tan";
    case OpCode::Square: return "square";
    default: return "?";
  }
}

}  // namespace

TokenLibrary TokenLibrary::build(int variable_count,
                                 const std::vector<std::string>& unary,
                                 const std::vector<std::string>& binary,
                                 bool with_constant, bool with_one) {
  std::vector<Token> tokens;
  for (const auto& name : binary) {
    OpCode op = opcode_from_name(name);
    tokens.push_back({-1, TokenKind::Binary, 2, op, -1, print_symbol(op)});
  }
  for (const auto& name : unary) {
    OpCode op = opcode_from_name(name);
    tokens.push_back({-1, TokenKind::Unary, 1, op, -1, print_symbol(op)});
  }
  for (int v = 0; v < variable_count; ++v)
    tokens.push_back({-1, TokenKind::Variable, 0, OpCode::Var, v,
                      "x" + std::to_string(v + 1)});
  if (with_constant)
    tokens.push_back({-1, TokenKind::Constant, 0, OpCode::Const, -1, "c"});
  if (with_one)
    tokens.push_back({-1, TokenKind::LiteralOne, 0, OpCode::One, -1, "1"});
  return TokenLibrary(std::move(tokens), variable_count);
}

ExprTree ExprTree::from_tokens(std::span<const int> token_ids, const TokenLibrary& lib) {
  BfsBuilder builder(lib);
  for (std::size_t i = 0; i < token_ids.size(); ++i) {
    if (builder.complete())
      throw StructuralError("token sequence continues past a complete tree");
    builder.push(token_ids[i]);
  }
  if (!builder.complete())
    throw StructuralError("token sequence leaves open child slots");
  return builder.take();
}

void assign_positions(ExprTree& tree, const TokenLibrary& lib) {
  if (tree.nodes.empty()) throw StructuralError("empty tree");
  std::vector<int> child_count(tree.nodes.size(), 0);
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    ExprNode& n = tree.nodes[i];
    if (i == 0) {
      if (n.parent != -1 || n.slot != ChildSlot::Root)
        throw StructuralError("node 0 must be the root");
      n.depth = 1;
      n.horizontal = 0.5;
      continue;
    }
    if (n.parent < 0 || n.parent >= static_cast<int>(i))
      throw StructuralError("node " + std::to_string(i) +
                            ": parent must precede it in BFS order");
    const ExprNode& p = tree.nodes[n.parent];
    const Token& pt = lib[p.token_id];
    if (++child_count[n.parent] > pt.arity)
      throw StructuralError("node " + std::to_string(n.parent) +
                            ": more children than token arity");
    if (n.slot == ChildSlot::Root)
      throw StructuralError("non-root node with root slot");
    if (pt.arity == 1 && n.slot != ChildSlot::Left)
      throw StructuralError("unary child must fill the left slot");
    n.depth = p.depth + 1;
    double offset = std::ldexp(1.0, -n.depth);  // 1 / 2^depth
    n.horizontal = n.slot == ChildSlot::Left ? p.horizontal - offset
                                             : p.horizontal + offset;
  }
  if (tree.complete) {
    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
      if (child_count[i] != lib[tree.nodes[i].token_id].arity)
        throw StructuralError("complete tree has an unfilled child slot");
  }
}

int count_constants(const TokenLibrary& lib, const ExprTree& tree) {
  int n = 0;
  for (const ExprNode& node : tree.nodes)
    if (lib[node.token_id].kind == TokenKind::Constant) ++n;
  return n;
}

int complexity(const TokenLibrary& lib, const ExprTree& tree) {
  return tree.node_count() + count_constants(lib, tree);
}

int complexity(const TokenLibrary& lib, const Expression& expr) {
  if (!expr.tree.complete) throw UsageError("complexity: expression tree is incomplete");
  return complexity(lib, expr.tree);
}

int BfsBuilder::next_depth() const {
  if (!started_) return 1;
  if (open_.empty()) throw UsageError("tree is complete; no next slot");
  return tree_.nodes[open_.front().parent].depth + 1;
}

double BfsBuilder::next_horizontal() const {
  if (!started_) return 0.5;
  if (open_.empty()) throw UsageError("tree is complete; no next slot");
  const Pending& slot = open_.front();
  const ExprNode& p = tree_.nodes[slot.parent];
  double offset = std::ldexp(1.0, -(p.depth + 1));
  return slot.slot == ChildSlot::Left ? p.horizontal - offset : p.horizontal + offset;
}

int BfsBuilder::next_parent() const {
  if (!started_) return -1;
  if (open_.empty()) throw UsageError("tree is complete; no next slot");
  return open_.front().parent;
}

ChildSlot BfsBuilder::next_slot() const {
  return started_ ? open_.front().slot : ChildSlot::Root;
}

int BfsBuilder::parent_token() const {
  int p = next_parent();
  return p < 0 ? -1 : tree_.nodes[p].token_id;
}

int BfsBuilder::sibling_token() const {
  if (!started_ || open_.empty()) return -1;
  const Pending& slot = open_.front();
  if (slot.slot != ChildSlot::Right) return -1;
  // The left sibling was pushed before any right slot of the same parent is
  // filled; scan this parent's children (cheap: trees are small).
  for (const ExprNode& n : tree_.nodes)
    if (n.parent == slot.parent && n.slot == ChildSlot::Left) return n.token_id;
  return -1;
}

void BfsBuilder::push(int token_id) {
  if (token_id < 0 || token_id >= lib_->size())
    throw UsageError("token id out of range");
  ExprNode node;
  node.token_id = token_id;
  if (!started_) {
    node.parent = -1;
    node.slot = ChildSlot::Root;
    node.depth = 1;
    node.horizontal = 0.5;
    started_ = true;
  } else {
    if (open_.empty()) throw UsageError("push on a complete tree");
    Pending slot = open_.front();
    open_.pop_front();
    node.parent = slot.parent;
    node.slot = slot.slot;
    const ExprNode& p = tree_.nodes[slot.parent];
    node.depth = p.depth + 1;
    double offset = std::ldexp(1.0, -node.depth);
    node.horizontal = slot.slot == ChildSlot::Left ? p.horizontal - offset
                                                   : p.horizontal + offset;
  }
  int index = tree_.node_count();
  tree_.nodes.push_back(node);
  int arity = (*lib_)[token_id].arity;
  if (arity >= 1) open_.push_back({index, ChildSlot::Left});
  if (arity == 2) open_.push_back({index, ChildSlot::Right});
  tree_.complete = open_.empty();
}

ExprTree BfsBuilder::take() {
  if (!complete()) throw UsageError("take() on an incomplete tree");
  tree_.complete = true;
  return std::move(tree_);
}

}  // namespace symreg
