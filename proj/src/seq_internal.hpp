#pragma once
// Shared pieces of the sequence-text pipeline, not part of the public API.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "siv/seq.hpp"

namespace siv::detail {

// evaluates in canonical units when every symbol is in env, else nullopt
std::optional<double> const_eval_expr(
    const ExprPtr& e, const std::map<std::string, double>& env);
// pi plus every header param whose value is a resolvable constant
std::map<std::string, double> const_param_env(const HeaderNode& h);

struct Token {
  enum Kind {
    Ident,
    Number,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Eq,
    Colon,
    Plus,
    Minus,
    Star,
    Slash,
    Dollar,
    End,
  };
  Kind kind = End;
  std::string text;  // ident spelling
  double value = 0.0;
  std::string unit;  // attached unit on a number, may be empty
  int line = 1, col = 1;
};

const char* token_name(Token::Kind kind);

// Splits source into tokens; keeps the raw lines for caret diagnostics.
struct LexedSource {
  std::string name;
  std::vector<std::string> lines;
  std::vector<Token> tokens;
};
LexedSource lex_sequence(const std::string& text,
                         const std::string& source_name);

[[noreturn]] void fail_at(const LexedSource& src, SeqErrorKind kind, int line,
                          int col, const std::string& message);

std::string format_number(double v);

}  // namespace siv::detail
