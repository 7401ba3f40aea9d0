#pragma once

#include <string>
#include <vector>

#include "relnn/frontend/ast.hpp"

namespace relnn::frontend {

struct Token {
  enum class Kind { Ident, Number, String, Punct, End };
  Kind kind = Kind::End;
  std::string text;  // punctuation is normalized: "≤" -> "<=", "⟨" -> "<", ...
  SourcePos pos;
};

// Throws FrontendError("line L, col C: ...") on malformed input.
std::vector<Token> lex(const std::string& source);

Program parse(const std::string& source);

}  // namespace relnn::frontend
