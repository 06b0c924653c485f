#include "seq_internal.hpp"

namespace siv {

namespace {

int precedence(char op) { return (op == '+' || op == '-') ? 1 : 2; }

void print_expr(std::string& out, const ExprPtr& e, int parent_prec,
                bool right_side) {
  switch (e->kind) {
    case Expr::Number:
      out += detail::format_number(e->value);
      out += e->unit;
      return;
    case Expr::Symbol:
      if (e->dollar) out += '$';
      out += e->name;
      return;
    case Expr::Negate:
      out += '-';
      print_expr(out, e->lhs, 3, false);
      return;
    case Expr::Binary: {
      const int prec = precedence(e->op);
      const bool parens =
          prec < parent_prec || (prec == parent_prec && right_side);
      if (parens) out += '(';
      print_expr(out, e->lhs, prec, false);
      if (prec == 1) {
        out += ' ';
        out += e->op;
        out += ' ';
      } else {
        out += e->op;
      }
      print_expr(out, e->rhs, prec, true);
      if (parens) out += ')';
      return;
    }
  }
}

std::string expr_text(const ExprPtr& e) {
  std::string s;
  print_expr(s, e, 0, false);
  return s;
}

std::string phase_text(const PhaseExpr& p) {
  static const char* axes[] = {"x", "y", "-x", "-y"};
  if (p.axis < 0) return expr_text(p.offset);
  std::string s = axes[p.axis];
  if (p.offset) s += " + " + expr_text(p.offset);
  return s;
}

void print_items(std::string& out, const std::vector<ItemNode>& items,
                 int depth) {
  const std::string ind(2 * depth, ' ');
  for (const ItemNode& item : items) {
    if (item.is_repeat) {
      out += ind + "repeat " + expr_text(item.count) + " {\n";
      print_items(out, item.body, depth + 1);
      out += ind + "}\n";
      continue;
    }
    const EventNode& ev = item.event;
    switch (ev.kind) {
      case EventNode::Laser:
        out += ind + "laser dur=" + expr_text(ev.dur) + ";\n";
        break;
      case EventNode::Wait:
        out += ind + "wait dur=" + expr_text(ev.dur) + ";\n";
        break;
      case EventNode::Readout:
        out += ind + "readout dur=" + expr_text(ev.dur) + ";\n";
        break;
      case EventNode::Rf:
        out += ind + "rf dur=" + expr_text(ev.dur) +
               " phase=" + phase_text(ev.phase) +
               " rabi=" + expr_text(ev.rabi);
        if (ev.det) out += " det=" + expr_text(ev.det);
        out += ";\n";
        break;
    }
  }
}

}  // namespace

std::string serialize_sequence(const SequenceAst& ast) {
  std::string out;
  const HeaderNode& h = ast.header;
  out += "header {\n";
  out += "  center " + h.center + ";\n";
  for (const auto& [name, expr] : h.params)
    out += "  param " + name + " = " + expr_text(expr) + ";\n";
  if (h.t1) out += "  t1 = " + expr_text(h.t1) + ";\n";
  if (h.t2) out += "  t2 = " + expr_text(h.t2) + ";\n";
  if (h.ensemble.present)
    out += "  ensemble members=" + expr_text(h.ensemble.members) +
           " width=" + expr_text(h.ensemble.width) +
           " dist=" + h.ensemble.dist + ";\n";
  if (h.noise.present)
    out += "  noise sigma=" + expr_text(h.noise.sigma) +
           " tau_c=" + expr_text(h.noise.tau_c) + ";\n";
  out += "}\n";
  out += "sequence {\n";
  print_items(out, ast.sequence, 1);
  out += "}\n";
  if (ast.reference) {
    out += "reference {\n";
    print_items(out, *ast.reference, 1);
    out += "}\n";
  }
  out += "sweep " + ast.sweep.var + " = " +
         detail::format_number(ast.sweep.start) + ":" +
         detail::format_number(ast.sweep.step) + ":" +
         detail::format_number(ast.sweep.stop) + ast.sweep.unit + ";\n";
  return out;
}

}  // namespace siv
