#include <cmath>
#include <map>
#include <numbers>

#include "seq_internal.hpp"

namespace siv {

std::vector<double> sweep_grid(const SweepNode& s) {
  if (!(s.step > 0.0)) throw std::invalid_argument("sweep step must be > 0");
  std::vector<double> g;
  if (s.stop < s.start) return g;
  const double scale = unit_scale(s.unit);
  const int count =
      static_cast<int>(std::floor((s.stop - s.start) / s.step + 1e-9)) + 1;
  g.reserve(count);
  for (int i = 0; i < count; ++i) g.push_back((s.start + i * s.step) * scale);
  return g;
}

namespace {

struct Evaluator {
  std::map<std::string, double> env;

  double eval(const ExprPtr& e) const {
    switch (e->kind) {
      case Expr::Number:
        return e->value * unit_scale(e->unit);
      case Expr::Symbol:
        return env.at(e->name);
      case Expr::Negate:
        return -eval(e->lhs);
      case Expr::Binary: {
        const double l = eval(e->lhs), r = eval(e->rhs);
        switch (e->op) {
          case '+':
            return l + r;
          case '-':
            return l - r;
          case '*':
            return l * r;
          case '/':
            return l / r;
        }
        throw std::logic_error("bad operator");
      }
    }
    throw std::logic_error("bad expr kind");
  }
};

[[noreturn]] void grid_fail(size_t grid_index, int line, int col,
                            const std::string& msg) {
  throw SeqError(SeqErrorKind::GridEvaluation, line, col,
                 msg + " at grid index " + std::to_string(grid_index), "");
}

void expand_items(const std::vector<ItemNode>& items, const Evaluator& ev,
                  std::vector<Event>& out, size_t gi) {
  for (const ItemNode& item : items) {
    if (item.is_repeat) {
      const double c = ev.eval(item.count);
      if (!std::isfinite(c) || c < -1e-9 ||
          std::abs(c - std::round(c)) > 1e-9)
        grid_fail(gi, item.count->line, item.count->col,
                  "repeat count must be a nonnegative integer");
      const long n = std::lround(c);
      for (long k = 0; k < n; ++k) expand_items(item.body, ev, out, gi);
      continue;
    }
    const EventNode& e = item.event;
    const double dur = ev.eval(e.dur);
    if (!std::isfinite(dur))
      grid_fail(gi, e.line, e.col, "duration does not evaluate to a number");
    switch (e.kind) {
      case EventNode::Laser:
        if (!(dur > 0.0))
          grid_fail(gi, e.line, e.col, "laser duration must be > 0");
        out.push_back(LaserPulse{dur});
        break;
      case EventNode::Wait:
        if (dur < 0.0)
          grid_fail(gi, e.line, e.col, "negative wait duration");
        if (dur > 0.0) out.push_back(Wait{dur});
        break;
      case EventNode::Readout:
        if (!(dur > 0.0))
          grid_fail(gi, e.line, e.col, "readout duration must be > 0");
        out.push_back(Readout{dur});
        break;
      case EventNode::Rf: {
        if (dur < 0.0) grid_fail(gi, e.line, e.col, "negative rf duration");
        const double rabi = ev.eval(e.rabi);
        if (!std::isfinite(rabi) || rabi < 0.0)
          grid_fail(gi, e.line, e.col, "rabi must evaluate to >= 0");
        double phase = e.phase.axis >= 0 ? axis_phase_rad(e.phase.axis) : 0.0;
        if (e.phase.offset) phase += ev.eval(e.phase.offset);
        const double det = e.det ? ev.eval(e.det) : 0.0;
        if (!std::isfinite(phase) || !std::isfinite(det))
          grid_fail(gi, e.line, e.col, "rf parameters must be finite");
        if (dur > 0.0) out.push_back(RfPulse{dur, phase, rabi, det});
        break;
      }
    }
  }
}

}  // namespace

CompiledFamily compile_sequence(const SequenceAst& ast) {
  CompiledFamily fam;
  fam.sweep_var = ast.sweep.var;
  fam.sweep_dim = unit_dim(ast.sweep.unit);
  fam.grid = sweep_grid(ast.sweep);
  for (size_t i = 0; i < fam.grid.size(); ++i) {
    Evaluator ev;
    ev.env["pi"] = std::numbers::pi;
    ev.env[ast.sweep.var] = fam.grid[i];
    for (const auto& [name, expr] : ast.header.params)
      ev.env[name] = ev.eval(expr);
    PulseProgram p;
    expand_items(ast.sequence, ev, p.events, i);
    if (ast.reference) expand_items(*ast.reference, ev, p.reference, i);
    fam.programs.push_back(std::move(p));
  }
  return fam;
}

RunSetup resolve_run_setup(const SequenceAst& ast, int default_members,
                           std::uint64_t seed) {
  RunSetup out;
  out.preset = preset_by_name(ast.header.center);
  const auto env = detail::const_param_env(ast.header);
  auto need = [&](const ExprPtr& e, const char* what) {
    const auto v = detail::const_eval_expr(e, env);
    if (!v || !std::isfinite(*v))
      throw std::invalid_argument(std::string(what) +
                                  " must be a finite constant");
    return *v;
  };
  if (ast.header.t1) out.preset.relax.t1_us = need(ast.header.t1, "t1");
  if (ast.header.t2) out.preset.relax.t2_us = need(ast.header.t2, "t2");
  if (ast.header.noise.present) {
    const OuNoise noise{need(ast.header.noise.sigma, "sigma"),
                        need(ast.header.noise.tau_c, "tau_c")};
    out.preset.relax.noise = noise;
    out.preset.defaults.noise = noise;
  }
  if (ast.header.ensemble.present) {
    const double m = need(ast.header.ensemble.members, "members");
    if (!(m >= 1.0) || std::abs(m - std::round(m)) > 1e-9)
      throw std::invalid_argument("members must be a positive integer");
    Detuning dist = Detuning::Delta;
    if (ast.header.ensemble.dist == "lorentzian")
      dist = Detuning::Lorentzian;
    else if (ast.header.ensemble.dist == "gaussian")
      dist = Detuning::Gaussian;
    out.ensemble = EnsembleSpec{static_cast<int>(std::lround(m)), dist,
                                need(ast.header.ensemble.width, "width"),
                                seed};
  } else {
    out.ensemble = out.preset.ensemble(default_members, seed);
  }
  return out;
}

}  // namespace siv
