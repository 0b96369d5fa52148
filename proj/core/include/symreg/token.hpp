#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "symreg/errors.hpp"

namespace symreg {

enum class TokenKind { Binary, Unary, Variable, Constant, LiteralOne };

// What the evaluator does with a token.
enum class OpCode {
  Add, Sub, Mul, Div, Pow,          // binary
  Sin, Cos, Log, Sqrt, Exp, Tan, Square,  // unary
  Var, Const, One                   // leaves
};

struct Token {
  int id = -1;
  TokenKind kind = TokenKind::Variable;
  int arity = 0;         // 2 for binary, 1 for unary, 0 otherwise
  OpCode op = OpCode::Var;
  int var_index = -1;    // for Variable tokens, 0-based input column
  std::string symbol;    // printable name
};

inline int arity_of(TokenKind kind) {
  switch (kind) {
    case TokenKind::Binary: return 2;
    case TokenKind::Unary: return 1;
    default: return 0;
  }
}

// Is this a token whose value carries no data dependence (c or 1)?
inline bool is_constant_kind(TokenKind kind) {
  return kind == TokenKind::Constant || kind == TokenKind::LiteralOne;
}

// Ordered operator/variable/constant vocabulary. Ids are dense: token i has
// id i. Construction validates: at least one variable, at least one operator,
// at most one constant token.
class TokenLibrary {
 public:
  TokenLibrary(std::vector<Token> tokens, int variable_count);

  // Convenience factory. `unary` and `binary` list operator names
  // ("sin", "cos", "log", "sqrt", "exp", "tan", "square";
  //  "add"/"+", "sub"/"-", "mul"/"*", "div"/"/", "pow"/"^").
  static TokenLibrary build(int variable_count,
                            const std::vector<std::string>& unary,
                            const std::vector<std::string>& binary,
                            bool with_constant, bool with_one);

  int size() const { return static_cast<int>(tokens_.size()); }
  const Token& operator[](int id) const { return tokens_.at(id); }
  int variable_count() const { return variable_count_; }

  std::optional<int> find(std::string_view symbol) const;
  int constant_id() const { return constant_id_; }  // -1 if absent
  int one_id() const { return one_id_; }            // -1 if absent

  const std::vector<Token>& tokens() const { return tokens_; }

 private:
  std::vector<Token> tokens_;
  int variable_count_ = 0;
  int constant_id_ = -1;
  int one_id_ = -1;
};

// Maps an operator name to its opcode; throws UsageError on unknown names.
OpCode opcode_from_name(std::string_view name);

}  // namespace symreg
