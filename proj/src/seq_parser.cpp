#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>

#include "seq_internal.hpp"

namespace siv {

using detail::LexedSource;
using detail::Token;

ExprPtr number_expr(double value, const std::string& unit) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Number;
  e->value = value;
  e->unit = unit;
  return e;
}

ExprPtr symbol_expr(const std::string& name, bool dollar) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Symbol;
  e->name = name;
  e->dollar = dollar;
  return e;
}

ExprPtr binary_expr(char op, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Binary;
  e->op = op;
  e->lhs = std::move(lhs);
  e->rhs = std::move(rhs);
  return e;
}

ExprPtr negate_expr(ExprPtr inner) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Negate;
  e->lhs = std::move(inner);
  return e;
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a && !b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Expr::Number:
      // 1000ns and 1us are the same quantity
      return unit_dim(a->unit) == unit_dim(b->unit) &&
             a->value * unit_scale(a->unit) == b->value * unit_scale(b->unit);
    case Expr::Symbol:
      return a->name == b->name && a->dollar == b->dollar;
    case Expr::Binary:
      return a->op == b->op && expr_equal(a->lhs, b->lhs) &&
             expr_equal(a->rhs, b->rhs);
    case Expr::Negate:
      return expr_equal(a->lhs, b->lhs);
  }
  return false;
}

bool phase_equal(const PhaseExpr& a, const PhaseExpr& b) {
  return a.axis == b.axis && expr_equal(a.offset, b.offset);
}

double axis_phase_rad(int axis) {
  switch (axis) {
    case 0:
      return 0.0;
    case 1:
      return 0.5 * std::numbers::pi;
    case 2:
      return std::numbers::pi;
    case 3:
      return 1.5 * std::numbers::pi;
  }
  throw std::invalid_argument("bad axis index");
}

namespace {

bool event_equal(const EventNode& a, const EventNode& b) {
  return a.kind == b.kind && expr_equal(a.dur, b.dur) &&
         phase_equal(a.phase, b.phase) && expr_equal(a.rabi, b.rabi) &&
         expr_equal(a.det, b.det);
}

bool items_equal(const std::vector<ItemNode>& a,
                 const std::vector<ItemNode>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!item_equal(a[i], b[i])) return false;
  return true;
}

}  // namespace

bool item_equal(const ItemNode& a, const ItemNode& b) {
  if (a.is_repeat != b.is_repeat) return false;
  if (a.is_repeat)
    return expr_equal(a.count, b.count) && items_equal(a.body, b.body);
  return event_equal(a.event, b.event);
}

bool ast_equal(const SequenceAst& a, const SequenceAst& b) {
  const HeaderNode& ha = a.header;
  const HeaderNode& hb = b.header;
  if (ha.center != hb.center) return false;
  if (ha.params.size() != hb.params.size()) return false;
  for (size_t i = 0; i < ha.params.size(); ++i) {
    if (ha.params[i].first != hb.params[i].first) return false;
    if (!expr_equal(ha.params[i].second, hb.params[i].second)) return false;
  }
  if (!expr_equal(ha.t1, hb.t1) || !expr_equal(ha.t2, hb.t2)) return false;
  if (ha.ensemble.present != hb.ensemble.present) return false;
  if (ha.ensemble.present &&
      (!expr_equal(ha.ensemble.members, hb.ensemble.members) ||
       !expr_equal(ha.ensemble.width, hb.ensemble.width) ||
       ha.ensemble.dist != hb.ensemble.dist))
    return false;
  if (ha.noise.present != hb.noise.present) return false;
  if (ha.noise.present && (!expr_equal(ha.noise.sigma, hb.noise.sigma) ||
                           !expr_equal(ha.noise.tau_c, hb.noise.tau_c)))
    return false;
  if (!items_equal(a.sequence, b.sequence)) return false;
  if (a.reference.has_value() != b.reference.has_value()) return false;
  if (a.reference && !items_equal(*a.reference, *b.reference)) return false;
  const SweepNode& sa = a.sweep;
  const SweepNode& sb = b.sweep;
  const double ka = unit_scale(sa.unit), kb = unit_scale(sb.unit);
  return sa.var == sb.var && unit_dim(sa.unit) == unit_dim(sb.unit) &&
         sa.start * ka == sb.start * kb && sa.step * ka == sb.step * kb &&
         sa.stop * ka == sb.stop * kb;
}

namespace detail {

std::optional<double> const_eval_expr(
    const ExprPtr& e, const std::map<std::string, double>& env) {
  if (!e) return std::nullopt;
  switch (e->kind) {
    case Expr::Number:
      return e->value * unit_scale(e->unit);
    case Expr::Symbol: {
      const auto it = env.find(e->name);
      if (it == env.end()) return std::nullopt;
      return it->second;
    }
    case Expr::Negate: {
      const auto v = const_eval_expr(e->lhs, env);
      if (!v) return std::nullopt;
      return -*v;
    }
    case Expr::Binary: {
      const auto l = const_eval_expr(e->lhs, env);
      const auto r = const_eval_expr(e->rhs, env);
      if (!l || !r) return std::nullopt;
      switch (e->op) {
        case '+':
          return *l + *r;
        case '-':
          return *l - *r;
        case '*':
          return *l * *r;
        case '/':
          return *l / *r;
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::map<std::string, double> const_param_env(const HeaderNode& h) {
  std::map<std::string, double> env{{"pi", std::numbers::pi}};
  for (const auto& [name, expr] : h.params) {
    const auto v = const_eval_expr(expr, env);
    if (v) env[name] = *v;
  }
  return env;
}

}  // namespace detail

namespace {

const char* dim_name(Dim d) {
  switch (d) {
    case Dim::None:
      return "dimensionless";
    case Dim::Time:
      return "time";
    case Dim::Freq:
      return "frequency";
  }
  return "?";
}

const char* event_name(EventNode::Kind k) {
  switch (k) {
    case EventNode::Laser:
      return "laser";
    case EventNode::Rf:
      return "rf";
    case EventNode::Wait:
      return "wait";
    case EventNode::Readout:
      return "readout";
  }
  return "?";
}

struct Parser {
  const LexedSource& src;
  size_t pos = 0;

  const Token& peek(size_t off = 0) const {
    const size_t i = std::min(pos + off, src.tokens.size() - 1);
    return src.tokens[i];
  }
  const Token& get() {
    const Token& t = src.tokens[pos];
    if (t.kind != Token::End) ++pos;
    return t;
  }
  [[noreturn]] void fail(SeqErrorKind kind, const Token& t,
                         const std::string& msg) const {
    detail::fail_at(src, kind, t.line, t.col, msg);
  }
  void expect(Token::Kind k, const char* what) {
    if (peek().kind != k)
      fail(SeqErrorKind::Syntax, peek(),
           std::string("expected ") + what + ", got " +
               detail::token_name(peek().kind));
    get();
  }
  bool accept(Token::Kind k) {
    if (peek().kind != k) return false;
    get();
    return true;
  }
  Token expect_ident(const char* what) {
    if (peek().kind != Token::Ident)
      fail(SeqErrorKind::Syntax, peek(),
           std::string("expected ") + what + ", got " +
               detail::token_name(peek().kind));
    return get();
  }
  void expect_keyword(const char* word) {
    const Token t = expect_ident(word);
    if (t.text != word)
      fail(SeqErrorKind::Syntax, t,
           std::string("expected '") + word + "', got '" + t.text + "'");
  }

  ExprPtr parse_factor() {
    const Token& t = peek();
    switch (t.kind) {
      case Token::Number: {
        auto e = number_expr(t.value, t.unit);
        const_cast<Expr&>(*e).line = t.line;
        const_cast<Expr&>(*e).col = t.col;
        get();
        return e;
      }
      case Token::Dollar: {
        get();
        const Token name = expect_ident("identifier after '$'");
        auto e = symbol_expr(name.text, true);
        const_cast<Expr&>(*e).line = name.line;
        const_cast<Expr&>(*e).col = name.col;
        return e;
      }
      case Token::Ident: {
        auto e = symbol_expr(t.text, false);
        const_cast<Expr&>(*e).line = t.line;
        const_cast<Expr&>(*e).col = t.col;
        get();
        return e;
      }
      case Token::LParen: {
        get();
        ExprPtr e = parse_expr();
        expect(Token::RParen, "')'");
        return e;
      }
      case Token::Minus: {
        get();
        auto e = negate_expr(parse_factor());
        const_cast<Expr&>(*e).line = t.line;
        const_cast<Expr&>(*e).col = t.col;
        return e;
      }
      default:
        fail(SeqErrorKind::Syntax, t,
             std::string("expected expression, got ") +
                 detail::token_name(t.kind));
    }
  }

  ExprPtr parse_term() {
    ExprPtr e = parse_factor();
    while (peek().kind == Token::Star || peek().kind == Token::Slash) {
      const Token op = get();
      auto n = binary_expr(op.kind == Token::Star ? '*' : '/', e,
                           parse_factor());
      const_cast<Expr&>(*n).line = op.line;
      const_cast<Expr&>(*n).col = op.col;
      e = n;
    }
    return e;
  }

  ExprPtr parse_expr() {
    ExprPtr e = parse_term();
    while (peek().kind == Token::Plus || peek().kind == Token::Minus) {
      const Token op = get();
      auto n =
          binary_expr(op.kind == Token::Plus ? '+' : '-', e, parse_term());
      const_cast<Expr&>(*n).line = op.line;
      const_cast<Expr&>(*n).col = op.col;
      e = n;
    }
    return e;
  }

  PhaseExpr parse_phase() {
    PhaseExpr p;
    // axis shorthands claim a leading x / y / -x / -y
    if (peek().kind == Token::Ident &&
        (peek().text == "x" || peek().text == "y")) {
      p.axis = peek().text == "x" ? 0 : 1;
      get();
    } else if (peek().kind == Token::Minus && peek(1).kind == Token::Ident &&
               (peek(1).text == "x" || peek(1).text == "y")) {
      get();
      p.axis = peek().text == "x" ? 2 : 3;
      get();
    } else {
      p.offset = parse_expr();
      return p;
    }
    if (accept(Token::Plus)) p.offset = parse_expr();
    return p;
  }

  EventNode parse_event(EventNode::Kind kind, const Token& kw) {
    EventNode ev;
    ev.kind = kind;
    ev.line = kw.line;
    ev.col = kw.col;
    std::set<std::string> seen;
    while (peek().kind == Token::Ident) {
      const Token key = get();
      const bool rf = kind == EventNode::Rf;
      const bool known =
          key.text == "dur" ||
          (rf && (key.text == "phase" || key.text == "rabi" ||
                  key.text == "det"));
      if (!known)
        fail(SeqErrorKind::UnknownKeyword, key,
             "unknown key '" + key.text + "' for " + event_name(kind));
      if (!seen.insert(key.text).second)
        fail(SeqErrorKind::Syntax, key, "duplicate key '" + key.text + "'");
      expect(Token::Eq, "'='");
      if (key.text == "dur")
        ev.dur = parse_expr();
      else if (key.text == "phase")
        ev.phase = parse_phase();
      else if (key.text == "rabi")
        ev.rabi = parse_expr();
      else
        ev.det = parse_expr();
    }
    expect(Token::Semi, "';'");
    if (!ev.dur)
      fail(SeqErrorKind::Syntax, kw,
           std::string(event_name(kind)) + " needs dur");
    if (kind == EventNode::Rf && (!ev.rabi || (ev.phase.axis < 0 && !ev.phase.offset)))
      fail(SeqErrorKind::Syntax, kw, "rf needs phase and rabi");
    return ev;
  }

  // parses items until '}', returns the closing brace token
  Token parse_items(std::vector<ItemNode>& out, bool top, int& readouts) {
    while (true) {
      const Token& t = peek();
      if (t.kind == Token::RBrace) return get();
      if (t.kind != Token::Ident)
        fail(SeqErrorKind::Syntax, t,
             std::string("expected event or '}', got ") +
                 detail::token_name(t.kind));
      const Token kw = get();
      if (kw.text == "repeat") {
        ItemNode item;
        item.is_repeat = true;
        item.count = parse_expr();
        expect(Token::LBrace, "'{'");
        parse_items(item.body, false, readouts);
        out.push_back(std::move(item));
        continue;
      }
      EventNode::Kind kind;
      if (kw.text == "laser")
        kind = EventNode::Laser;
      else if (kw.text == "rf")
        kind = EventNode::Rf;
      else if (kw.text == "wait")
        kind = EventNode::Wait;
      else if (kw.text == "readout")
        kind = EventNode::Readout;
      else
        fail(SeqErrorKind::UnknownKeyword, kw,
             "unknown event '" + kw.text + "'");
      if (kind == EventNode::Readout) {
        if (!top)
          fail(SeqErrorKind::Syntax, kw, "readout cannot appear inside repeat");
        if (++readouts > 1)
          fail(SeqErrorKind::DuplicateReadout, kw,
               "a program reads out exactly once");
      }
      ItemNode item;
      item.event = parse_event(kind, kw);
      out.push_back(std::move(item));
    }
  }

  std::vector<ItemNode> parse_block(const char* name) {
    const Token kw = peek();
    expect_keyword(name);
    expect(Token::LBrace, "'{'");
    std::vector<ItemNode> items;
    int readouts = 0;
    const Token close = parse_items(items, true, readouts);
    if (readouts == 0)
      fail(SeqErrorKind::MissingReadout, close,
           std::string(name) + " block has no readout");
    (void)kw;
    return items;
  }

  HeaderNode parse_header() {
    HeaderNode h;
    const Token head = peek();
    expect_keyword("header");
    expect(Token::LBrace, "'{'");
    std::set<std::string> param_names{"pi"};
    while (!accept(Token::RBrace)) {
      const Token kw = expect_ident("header statement");
      if (kw.text == "center") {
        const Token name = expect_ident("center name");
        if (name.text != "v1v3" && name.text != "v2")
          fail(SeqErrorKind::UnknownKeyword, name,
               "unknown center '" + name.text + "'");
        if (!h.center.empty())
          fail(SeqErrorKind::Syntax, kw, "center given twice");
        h.center = name.text;
        expect(Token::Semi, "';'");
      } else if (kw.text == "param") {
        const Token name = expect_ident("parameter name");
        if (!param_names.insert(name.text).second)
          fail(SeqErrorKind::Syntax, name,
               "parameter '" + name.text + "' redefined");
        expect(Token::Eq, "'='");
        h.params.emplace_back(name.text, parse_expr());
        expect(Token::Semi, "';'");
      } else if (kw.text == "t1" || kw.text == "t2") {
        ExprPtr& slot = kw.text == "t1" ? h.t1 : h.t2;
        if (slot) fail(SeqErrorKind::Syntax, kw, kw.text + " given twice");
        expect(Token::Eq, "'='");
        slot = parse_expr();
        expect(Token::Semi, "';'");
      } else if (kw.text == "ensemble") {
        if (h.ensemble.present)
          fail(SeqErrorKind::Syntax, kw, "ensemble given twice");
        h.ensemble.present = true;
        std::set<std::string> seen;
        while (peek().kind == Token::Ident) {
          const Token key = get();
          if (key.text != "members" && key.text != "width" &&
              key.text != "dist")
            fail(SeqErrorKind::UnknownKeyword, key,
                 "unknown key '" + key.text + "' for ensemble");
          if (!seen.insert(key.text).second)
            fail(SeqErrorKind::Syntax, key,
                 "duplicate key '" + key.text + "'");
          expect(Token::Eq, "'='");
          if (key.text == "members")
            h.ensemble.members = parse_expr();
          else if (key.text == "width")
            h.ensemble.width = parse_expr();
          else {
            const Token d = expect_ident("distribution name");
            if (d.text != "lorentzian" && d.text != "gaussian" &&
                d.text != "delta")
              fail(SeqErrorKind::UnknownKeyword, d,
                   "unknown distribution '" + d.text + "'");
            h.ensemble.dist = d.text;
          }
        }
        expect(Token::Semi, "';'");
        if (!h.ensemble.members || !h.ensemble.width ||
            h.ensemble.dist.empty())
          fail(SeqErrorKind::Syntax, kw,
               "ensemble needs members, width and dist");
      } else if (kw.text == "noise") {
        if (h.noise.present)
          fail(SeqErrorKind::Syntax, kw, "noise given twice");
        h.noise.present = true;
        std::set<std::string> seen;
        while (peek().kind == Token::Ident) {
          const Token key = get();
          if (key.text != "sigma" && key.text != "tau_c")
            fail(SeqErrorKind::UnknownKeyword, key,
                 "unknown key '" + key.text + "' for noise");
          if (!seen.insert(key.text).second)
            fail(SeqErrorKind::Syntax, key,
                 "duplicate key '" + key.text + "'");
          expect(Token::Eq, "'='");
          (key.text == "sigma" ? h.noise.sigma : h.noise.tau_c) =
              parse_expr();
        }
        expect(Token::Semi, "';'");
        if (!h.noise.sigma || !h.noise.tau_c)
          fail(SeqErrorKind::Syntax, kw, "noise needs sigma and tau_c");
      } else {
        fail(SeqErrorKind::UnknownKeyword, kw,
             "unknown header statement '" + kw.text + "'");
      }
    }
    if (h.center.empty())
      fail(SeqErrorKind::Syntax, head, "header must name a center");
    return h;
  }

  double signed_number(std::string& unit, const Token*& where) {
    double sign = 1.0;
    if (accept(Token::Minus)) sign = -1.0;
    if (peek().kind != Token::Number)
      fail(SeqErrorKind::Syntax, peek(),
           std::string("expected number, got ") +
               detail::token_name(peek().kind));
    const Token& t = get();
    where = &t;
    unit = t.unit;
    return sign * t.value;
  }

  SweepNode parse_sweep() {
    SweepNode s;
    const Token kw = peek();
    expect_keyword("sweep");
    s.line = kw.line;
    s.col = kw.col;
    const Token var = expect_ident("sweep variable");
    s.var = var.text;
    expect(Token::Eq, "'='");
    std::string u0, u1, u2;
    const Token* t0;
    const Token* t1;
    const Token* t2;
    s.start = signed_number(u0, t0);
    expect(Token::Colon, "':'");
    s.step = signed_number(u1, t1);
    expect(Token::Colon, "':'");
    s.stop = signed_number(u2, t2);
    expect(Token::Semi, "';'");
    if (!u0.empty() || !u1.empty())
      fail(SeqErrorKind::BadSweep, !u0.empty() ? *t0 : *t1,
           "only the last range number carries the unit");
    s.unit = u2;
    if (!(s.step > 0.0))
      fail(SeqErrorKind::BadSweep, *t1, "sweep step must be > 0");
    if (!std::isfinite(s.start) || !std::isfinite(s.step) ||
        !std::isfinite(s.stop))
      fail(SeqErrorKind::BadSweep, *t0, "sweep range must be finite");
    return s;
  }
};

// static semantics: symbols resolve, dimensions agree, literal durations
// are sensible, header values do not depend on the sweep variable
struct Analyzer {
  const LexedSource& src;
  const SequenceAst& ast;
  std::map<std::string, Dim> dims;
  std::map<std::string, bool> param_sweep_dep;
  std::map<std::string, double> const_env;

  [[noreturn]] void fail(SeqErrorKind kind, int line, int col,
                         const std::string& msg) const {
    detail::fail_at(src, kind, line, col, msg);
  }

  Dim typecheck(const ExprPtr& e) {
    switch (e->kind) {
      case Expr::Number:
        return unit_dim(e->unit);
      case Expr::Symbol: {
        const auto it = dims.find(e->name);
        if (it == dims.end())
          fail(SeqErrorKind::UnresolvedSymbol, e->line, e->col,
               "unresolved symbol '" + e->name + "'");
        return it->second;
      }
      case Expr::Negate:
        return typecheck(e->lhs);
      case Expr::Binary: {
        const Dim l = typecheck(e->lhs);
        const Dim r = typecheck(e->rhs);
        if (e->op == '+' || e->op == '-') {
          if (l != r)
            fail(SeqErrorKind::DimensionError, e->line, e->col,
                 std::string("cannot ") + (e->op == '+' ? "add " : "subtract ") +
                     dim_name(l) + " and " + dim_name(r));
          return l;
        }
        if (e->op == '*') {
          if (l == Dim::None) return r;
          if (r == Dim::None) return l;
          if ((l == Dim::Time && r == Dim::Freq) ||
              (l == Dim::Freq && r == Dim::Time))
            return Dim::None;
          fail(SeqErrorKind::DimensionError, e->line, e->col,
               std::string("cannot multiply ") + dim_name(l) + " and " +
                   dim_name(r));
        }
        if (r == Dim::None) return l;
        if (l == r) return Dim::None;
        if (l == Dim::None && r == Dim::Time) return Dim::Freq;
        if (l == Dim::None && r == Dim::Freq) return Dim::Time;
        fail(SeqErrorKind::DimensionError, e->line, e->col,
             std::string("cannot divide ") + dim_name(l) + " by " +
                 dim_name(r));
      }
    }
    throw std::logic_error("unreachable expr kind");
  }

  void require(const ExprPtr& e, Dim want, const char* what) {
    const Dim got = typecheck(e);
    if (got != want)
      fail(SeqErrorKind::DimensionError, e->line, e->col,
           std::string(what) + " must be " + dim_name(want) + ", got " +
               dim_name(got));
  }

  bool depends_on_sweep(const ExprPtr& e) const {
    if (!e) return false;
    switch (e->kind) {
      case Expr::Number:
        return false;
      case Expr::Symbol: {
        if (e->name == ast.sweep.var) return true;
        const auto it = param_sweep_dep.find(e->name);
        return it != param_sweep_dep.end() && it->second;
      }
      case Expr::Negate:
        return depends_on_sweep(e->lhs);
      case Expr::Binary:
        return depends_on_sweep(e->lhs) || depends_on_sweep(e->rhs);
    }
    return false;
  }

  void forbid_sweep(const ExprPtr& e, const char* what) const {
    if (depends_on_sweep(e))
      fail(SeqErrorKind::BadSweep, e->line, e->col,
           std::string(what) + " cannot depend on the sweep variable");
  }

  void check_items(const std::vector<ItemNode>& items) {
    for (const ItemNode& item : items) {
      if (item.is_repeat) {
        require(item.count, Dim::None, "repeat count");
        check_items(item.body);
        continue;
      }
      const EventNode& ev = item.event;
      require(ev.dur, Dim::Time, "duration");
      const auto dur = detail::const_eval_expr(ev.dur, const_env);
      if (dur && std::isfinite(*dur)) {
        const bool bad = ev.kind == EventNode::Rf ? *dur < 0.0 : *dur <= 0.0;
        if (bad)
          fail(SeqErrorKind::NonpositiveDuration, ev.line, ev.col,
               std::string(event_name(ev.kind)) + " duration must be " +
                   (ev.kind == EventNode::Rf ? ">= 0" : "> 0"));
      }
      if (ev.kind == EventNode::Rf) {
        require(ev.rabi, Dim::Freq, "rabi");
        if (ev.det) require(ev.det, Dim::Freq, "det");
        if (ev.phase.offset) require(ev.phase.offset, Dim::None, "phase");
      }
    }
  }

  void run() {
    dims["pi"] = Dim::None;
    if (dims.count(ast.sweep.var))
      fail(SeqErrorKind::BadSweep, ast.sweep.line, ast.sweep.col,
           "sweep variable '" + ast.sweep.var + "' collides with a name");
    dims[ast.sweep.var] = unit_dim(ast.sweep.unit);
    for (const auto& [name, expr] : ast.header.params) {
      if (name == ast.sweep.var)
        fail(SeqErrorKind::BadSweep, ast.sweep.line, ast.sweep.col,
             "sweep variable '" + ast.sweep.var + "' collides with a param");
      dims[name] = typecheck(expr);
      param_sweep_dep[name] = depends_on_sweep(expr);
    }
    const_env = detail::const_param_env(ast.header);

    if (ast.header.t1) {
      require(ast.header.t1, Dim::Time, "t1");
      forbid_sweep(ast.header.t1, "t1");
    }
    if (ast.header.t2) {
      require(ast.header.t2, Dim::Time, "t2");
      forbid_sweep(ast.header.t2, "t2");
    }
    if (ast.header.ensemble.present) {
      const EnsembleStmt& en = ast.header.ensemble;
      require(en.members, Dim::None, "members");
      require(en.width, Dim::Freq, "width");
      forbid_sweep(en.members, "members");
      forbid_sweep(en.width, "width");
      const auto m = detail::const_eval_expr(en.members, const_env);
      if (!m || !(*m >= 1.0) || std::abs(*m - std::round(*m)) > 1e-9)
        fail(SeqErrorKind::Syntax, en.members->line, en.members->col,
             "members must be a positive integer");
    }
    if (ast.header.noise.present) {
      require(ast.header.noise.sigma, Dim::Freq, "sigma");
      require(ast.header.noise.tau_c, Dim::Time, "tau_c");
      forbid_sweep(ast.header.noise.sigma, "sigma");
      forbid_sweep(ast.header.noise.tau_c, "tau_c");
    }
    check_items(ast.sequence);
    if (ast.reference) check_items(*ast.reference);
  }
};

}  // namespace

SequenceAst parse_sequence(const std::string& text,
                           const std::string& source_name) {
  const LexedSource src = detail::lex_sequence(text, source_name);
  Parser p{src};
  SequenceAst ast;
  ast.header = p.parse_header();
  ast.sequence = p.parse_block("sequence");
  if (p.peek().kind == Token::Ident && p.peek().text == "reference")
    ast.reference = p.parse_block("reference");
  ast.sweep = p.parse_sweep();
  if (p.peek().kind != Token::End)
    p.fail(SeqErrorKind::Syntax, p.peek(), "expected end of input");
  Analyzer analyzer{src, ast, {}, {}, {}};
  analyzer.run();
  return ast;
}

}  // namespace siv
