#include "symreg/infix.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <deque>
#include <vector>

namespace symreg {

namespace {

int precedence(OpCode op) {
  switch (op) {
    case OpCode::Add:
    case OpCode::Sub: return 1;
    case OpCode::Mul:
    case OpCode::Div: return 2;
    case OpCode::Pow: return 3;
    default: return 4;
  }
}

std::string format_constant(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // Keep constants lexically distinct from the literal-one token.
  if (s.find_first_of(".eE") == std::string::npos &&
      s.find_first_of("infa") == std::string::npos)
    s += ".0";
  return s;
}

struct Printer {
  const TokenLibrary& lib;
  const ExprTree& tree;
  const std::vector<double>* constants;  // null for placeholder form
  std::vector<int> left, right, const_slot;

  Printer(const TokenLibrary& l, const ExprTree& t, const std::vector<double>* c)
      : lib(l), tree(t), constants(c) {
    const int n = tree.node_count();
    left.assign(n, -1);
    right.assign(n, -1);
    const_slot.assign(n, -1);
    int next_const = 0;
    for (int i = 0; i < n; ++i) {
      if (i > 0) {
        const ExprNode& node = tree.nodes[i];
        (node.slot == ChildSlot::Left ? left : right)[node.parent] = i;
      }
      if (lib[tree.nodes[i].token_id].kind == TokenKind::Constant)
        const_slot[i] = next_const++;
    }
  }

  // Effective precedence of the rendered fragment (negative constants act as
  // precedence 0 so they always get parenthesized under an operator).
  int frag_prec(int i) const {
    const Token& tok = lib[tree.nodes[i].token_id];
    if (tok.kind == TokenKind::Constant && constants &&
        (*constants)[const_slot[i]] < 0)
      return 0;
    return precedence(tok.op);
  }

  std::string render(int i) const {
    const Token& tok = lib[tree.nodes[i].token_id];
    switch (tok.kind) {
      case TokenKind::Variable: return tok.symbol;
      case TokenKind::LiteralOne: return "1";
      case TokenKind::Constant:
        return constants ? format_constant((*constants)[const_slot[i]]) : "c";
      case TokenKind::Unary: return tok.symbol + "(" + render(left[i]) + ")";
      case TokenKind::Binary: {
        const int p = precedence(tok.op);
        const bool right_assoc = tok.op == OpCode::Pow;
        std::string l = render(left[i]);
        std::string r = render(right[i]);
        // Parenthesization keeps the reparsed tree structurally identical.
        bool pl = right_assoc ? frag_prec(left[i]) <= p : frag_prec(left[i]) < p;
        bool pr = right_assoc ? frag_prec(right[i]) < p : frag_prec(right[i]) <= p;
        if (pl) l = "(" + l + ")";
        if (pr) r = "(" + r + ")";
        const char* sep = p == 1 ? " " : "";
        return l + sep + tok.symbol + sep + r;
      }
    }
    return "?";
  }
};

}  // namespace

std::string to_infix(const TokenLibrary& lib, const Expression& expr,
                     bool placeholders) {
  if (!expr.tree.complete) throw UsageError("to_infix: expression tree is incomplete");
  const std::vector<double>* constants =
      placeholders || expr.constants.empty() ? nullptr : &expr.constants;
  if (constants &&
      static_cast<int>(constants->size()) != count_constants(lib, expr.tree))
    throw UsageError("to_infix: constants length does not match constant-token count");
  return Printer(lib, expr.tree, constants).render(0);
}

std::string to_infix(const TokenLibrary& lib, const ExprTree& tree) {
  if (!tree.complete) throw UsageError("to_infix: tree is incomplete");
  return Printer(lib, tree, nullptr).render(0);
}

namespace {

// Parse-time AST; converted to BFS order once the whole input is consumed.
struct PNode {
  int token_id = -1;
  double value = 0.0;  // constant payload
  int child[2] = {-1, -1};
};

class Parser {
 public:
  Parser(const std::string& text, const TokenLibrary& lib) : text_(text), lib_(lib) {}

  Expression run() {
    int root = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
    // BFS linearization.
    std::vector<int> bfs_tokens;
    std::vector<double> bfs_constants;
    std::deque<int> queue{root};
    while (!queue.empty()) {
      int i = queue.front();
      queue.pop_front();
      const PNode& n = arena_[i];
      bfs_tokens.push_back(n.token_id);
      if (lib_[n.token_id].kind == TokenKind::Constant)
        bfs_constants.push_back(n.value);
      for (int c : n.child)
        if (c >= 0) queue.push_back(c);
    }
    Expression expr;
    expr.tree = ExprTree::from_tokens(bfs_tokens, lib_);
    expr.constants = std::move(bfs_constants);
    return expr;
  }

 private:
  const std::string& text_;
  const TokenLibrary& lib_;
  std::size_t pos_ = 0;
  std::vector<PNode> arena_;

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  int make(int token_id, double value = 0.0, int l = -1, int r = -1) {
    arena_.push_back({token_id, value, {l, r}});
    return static_cast<int>(arena_.size()) - 1;
  }

  int binary_token(OpCode op) {
    for (const Token& t : lib_.tokens())
      if (t.kind == TokenKind::Binary && t.op == op) return t.id;
    throw ParseError("operator not in token library", pos_ - 1);
  }

  int parse_sum() {
    int lhs = parse_product();
    for (;;) {
      if (eat('+')) lhs = make(binary_token(OpCode::Add), 0, lhs, parse_product());
      else if (eat('-')) lhs = make(binary_token(OpCode::Sub), 0, lhs, parse_product());
      else return lhs;
    }
  }

  int parse_product() {
    int lhs = parse_power();
    for (;;) {
      if (eat('*')) lhs = make(binary_token(OpCode::Mul), 0, lhs, parse_power());
      else if (eat('/')) lhs = make(binary_token(OpCode::Div), 0, lhs, parse_power());
      else return lhs;
    }
  }

  int parse_power() {
    int base = parse_atom();
    if (eat('^')) return make(binary_token(OpCode::Pow), 0, base, parse_power());
    return base;
  }

  int parse_number(bool negative) {
    skip_ws();
    std::size_t start = pos_;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec != std::errc() || ptr == text_.data() + pos_)
      throw ParseError("expected a number", pos_);
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    std::string_view literal(text_.data() + start, pos_ - start);
    if (!std::isfinite(value)) throw ParseError("non-finite literal", start);
    if (negative) value = -value;
    if (literal == "1" && !negative && lib_.one_id() >= 0)
      return make(lib_.one_id());
    if (lib_.constant_id() < 0)
      throw ParseError("numeric literal but library has no constant token", start);
    return make(lib_.constant_id(), value);
  }

  int parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      int inner = parse_sum();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    if (c == '-') {
      ++pos_;
      return parse_number(true);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return parse_number(false);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      std::string name = text_.substr(start, pos_ - start);
      auto id = lib_.find(name);
      if (!id) throw ParseError("unknown symbol '" + name + "'", start);
      const Token& tok = lib_[*id];
      if (tok.kind == TokenKind::Unary) {
        if (!eat('(')) throw ParseError("expected '(' after '" + name + "'", pos_);
        int inner = parse_sum();
        if (!eat(')')) throw ParseError("expected ')'", pos_);
        return make(tok.id, 0, inner);
      }
      if (tok.kind == TokenKind::Variable) return make(tok.id);
      if (tok.kind == TokenKind::Constant) return make(tok.id, 1.0);
      if (tok.kind == TokenKind::LiteralOne) return make(tok.id);
      throw ParseError("symbol '" + name + "' cannot start an operand", start);
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }
};

}  // namespace

Expression parse_infix(const std::string& text, const TokenLibrary& lib) {
  return Parser(text, lib).run();
}

}  // namespace symreg
