#include <cctype>
#include <charconv>
#include <stdexcept>

#include "seq_internal.hpp"

namespace siv {

const char* seq_error_kind_name(SeqErrorKind kind) {
  switch (kind) {
    case SeqErrorKind::Lexical:
      return "lexical error";
    case SeqErrorKind::Syntax:
      return "syntax error";
    case SeqErrorKind::UnknownKeyword:
      return "unknown keyword";
    case SeqErrorKind::UnresolvedSymbol:
      return "unresolved symbol";
    case SeqErrorKind::DuplicateReadout:
      return "duplicate readout";
    case SeqErrorKind::MissingReadout:
      return "missing readout";
    case SeqErrorKind::NonpositiveDuration:
      return "nonpositive duration";
    case SeqErrorKind::BadSweep:
      return "bad sweep";
    case SeqErrorKind::DimensionError:
      return "dimension error";
    case SeqErrorKind::GridEvaluation:
      return "grid evaluation error";
  }
  return "error";
}

SeqError::SeqError(SeqErrorKind kind, int line, int col,
                   const std::string& message, std::string excerpt)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) +
                         ": " + seq_error_kind_name(kind) + ": " + message +
                         (excerpt.empty() ? "" : "\n" + excerpt)),
      kind_(kind),
      line_(line),
      col_(col),
      excerpt_(std::move(excerpt)) {}

double unit_scale(const std::string& unit) {
  if (unit.empty()) return 1.0;
  if (unit == "ns") return 1e-3;
  if (unit == "us") return 1.0;
  if (unit == "ms") return 1e3;
  if (unit == "MHz") return 1.0;
  throw std::invalid_argument("unknown unit: " + unit);
}

Dim unit_dim(const std::string& unit) {
  if (unit.empty()) return Dim::None;
  if (unit == "MHz") return Dim::Freq;
  if (unit == "ns" || unit == "us" || unit == "ms") return Dim::Time;
  throw std::invalid_argument("unknown unit: " + unit);
}

namespace detail {

const char* token_name(Token::Kind kind) {
  switch (kind) {
    case Token::Ident:
      return "identifier";
    case Token::Number:
      return "number";
    case Token::LBrace:
      return "'{'";
    case Token::RBrace:
      return "'}'";
    case Token::LParen:
      return "'('";
    case Token::RParen:
      return "')'";
    case Token::Semi:
      return "';'";
    case Token::Eq:
      return "'='";
    case Token::Colon:
      return "':'";
    case Token::Plus:
      return "'+'";
    case Token::Minus:
      return "'-'";
    case Token::Star:
      return "'*'";
    case Token::Slash:
      return "'/'";
    case Token::Dollar:
      return "'$'";
    case Token::End:
      return "end of input";
  }
  return "token";
}

void fail_at(const LexedSource& src, SeqErrorKind kind, int line, int col,
             const std::string& message) {
  std::string excerpt;
  if (line >= 1 && line <= static_cast<int>(src.lines.size())) {
    excerpt = src.lines[line - 1] + "\n";
    for (int i = 1; i < col; ++i) excerpt += ' ';
    excerpt += '^';
  }
  throw SeqError(kind, line, col, message + " in " + src.name,
                 std::move(excerpt));
}

namespace {

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

bool known_unit(const std::string& s) {
  return s == "ns" || s == "us" || s == "ms" || s == "MHz";
}

}  // namespace

LexedSource lex_sequence(const std::string& text,
                         const std::string& source_name) {
  LexedSource src;
  src.name = source_name;
  std::string current;
  for (char c : text) {
    if (c == '\n') {
      src.lines.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  src.lines.push_back(current);

  size_t i = 0;
  int line = 1, col = 1;
  auto bump = [&](size_t count = 1) {
    for (size_t k = 0; k < count; ++k) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };

  while (i < text.size()) {
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      bump();
      continue;
    }
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') bump();
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (is_ident_start(c)) {
      size_t j = i;
      while (j < text.size() && is_ident_char(text[j])) ++j;
      t.kind = Token::Ident;
      t.text = text.substr(i, j - i);
      bump(j - i);
      src.tokens.push_back(std::move(t));
      continue;
    }
    if (is_digit(c)) {
      size_t j = i;
      while (j < text.size() && is_digit(text[j])) ++j;
      if (j < text.size() && text[j] == '.') {
        ++j;
        while (j < text.size() && is_digit(text[j])) ++j;
      }
      if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
        size_t k = j + 1;
        if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
        if (k < text.size() && is_digit(text[k])) {
          while (k < text.size() && is_digit(text[k])) ++k;
          j = k;
        }
      }
      double value = 0.0;
      const auto res =
          std::from_chars(text.data() + i, text.data() + j, value);
      if (res.ec != std::errc{} || res.ptr != text.data() + j)
        fail_at(src, SeqErrorKind::Lexical, t.line, t.col,
                "malformed number literal");
      t.kind = Token::Number;
      t.value = value;
      bump(j - i);
      // a unit binds only when attached directly to the literal
      if (i < text.size() && is_ident_start(text[i])) {
        const int uline = line, ucol = col;
        size_t k = i;
        while (k < text.size() && is_ident_char(text[k])) ++k;
        const std::string unit = text.substr(i, k - i);
        if (!known_unit(unit))
          fail_at(src, SeqErrorKind::UnknownKeyword, uline, ucol,
                  "unknown unit '" + unit + "'");
        t.unit = unit;
        bump(k - i);
      }
      src.tokens.push_back(std::move(t));
      continue;
    }
    switch (c) {
      case '{':
        t.kind = Token::LBrace;
        break;
      case '}':
        t.kind = Token::RBrace;
        break;
      case '(':
        t.kind = Token::LParen;
        break;
      case ')':
        t.kind = Token::RParen;
        break;
      case ';':
        t.kind = Token::Semi;
        break;
      case '=':
        t.kind = Token::Eq;
        break;
      case ':':
        t.kind = Token::Colon;
        break;
      case '+':
        t.kind = Token::Plus;
        break;
      case '-':
        t.kind = Token::Minus;
        break;
      case '*':
        t.kind = Token::Star;
        break;
      case '/':
        t.kind = Token::Slash;
        break;
      case '$':
        t.kind = Token::Dollar;
        break;
      default:
        fail_at(src, SeqErrorKind::Lexical, t.line, t.col,
                std::string("unexpected character '") + c + "'");
    }
    bump();
    src.tokens.push_back(std::move(t));
  }
  Token end;
  end.kind = Token::End;
  end.line = line;
  end.col = col;
  src.tokens.push_back(std::move(end));
  return src;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail
}  // namespace siv
