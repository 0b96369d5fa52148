#pragma once

#include <string>

#include "symreg/expr.hpp"

namespace symreg {

// Prints a complete expression in infix form, e.g. "x1^c + sin(x2)".
// Constant tokens print their fitted value with 17 significant digits so a
// round trip through parse_infix is exact; when `placeholders` is true (or
// the expression carries no constants vector) they print as "c".
std::string to_infix(const TokenLibrary& lib, const Expression& expr,
                     bool placeholders = false);
std::string to_infix(const TokenLibrary& lib, const ExprTree& tree);

// Parses infix text into an expression over the given library. Numeric
// literals become constant-token occurrences (bare "1" becomes the literal-one
// token when the library has it); "c" becomes a constant with value 1.
// Throws ParseError with a character position on malformed input.
Expression parse_infix(const std::string& text, const TokenLibrary& lib);

}  // namespace symreg
