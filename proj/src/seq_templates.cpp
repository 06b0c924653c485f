#include <stdexcept>

#include "siv/seq.hpp"

namespace siv {

namespace {

// engine init/readout windows, restated here as source literals
constexpr double kLaserUs = 300.0;
constexpr double kReadoutUs = 4.0;

ItemNode item(EventNode ev) {
  ItemNode n;
  n.event = std::move(ev);
  return n;
}

EventNode laser_event() {
  EventNode e;
  e.kind = EventNode::Laser;
  e.dur = number_expr(kLaserUs, "us");
  return e;
}

EventNode readout_event() {
  EventNode e;
  e.kind = EventNode::Readout;
  e.dur = number_expr(kReadoutUs, "us");
  return e;
}

EventNode wait_event(ExprPtr dur) {
  EventNode e;
  e.kind = EventNode::Wait;
  e.dur = std::move(dur);
  return e;
}

EventNode rf_event(ExprPtr dur, PhaseExpr phase, double rabi_mhz) {
  EventNode e;
  e.kind = EventNode::Rf;
  e.dur = std::move(dur);
  e.phase = std::move(phase);
  e.rabi = number_expr(rabi_mhz, "MHz");
  return e;
}

PhaseExpr axis(int a) { return {a, nullptr}; }

ExprPtr tau_ref() { return symbol_expr("tau", true); }

SweepNode sweep(const std::string& var, double start, double step,
                double stop, const std::string& unit) {
  SweepNode s;
  s.var = var;
  s.start = start;
  s.step = step;
  s.stop = stop;
  s.unit = unit;
  return s;
}

HeaderNode header_for(const CenterPreset& preset) {
  HeaderNode h;
  h.center = std::string(preset.name);
  return h;
}

SequenceAst rabi_template(const CenterPreset& p) {
  SequenceAst ast;
  ast.header = header_for(p);
  ast.sequence.push_back(item(laser_event()));
  ast.sequence.push_back(
      item(rf_event(tau_ref(), axis(0), p.defaults.rabi_low_mhz)));
  ast.sequence.push_back(item(readout_event()));
  std::vector<ItemNode> ref;
  ref.push_back(item(laser_event()));
  ref.push_back(item(wait_event(tau_ref())));
  ref.push_back(item(readout_event()));
  ast.reference = std::move(ref);
  ast.sweep = sweep("tau", 0, 10, 1000, "ns");
  return ast;
}

SequenceAst t1_template(const CenterPreset& p) {
  SequenceAst ast;
  ast.header = header_for(p);
  ast.sequence.push_back(item(laser_event()));
  ast.sequence.push_back(item(wait_event(tau_ref())));
  ast.sequence.push_back(item(readout_event()));
  std::vector<ItemNode> ref;
  ref.push_back(item(laser_event()));
  ref.push_back(item(rf_event(number_expr(p.defaults.pi_duration_us, "us"),
                              axis(0), p.defaults.pi_rabi_mhz)));
  ref.push_back(item(wait_event(tau_ref())));
  ref.push_back(item(readout_event()));
  ast.reference = std::move(ref);
  ast.sweep = sweep("tau", 0, 20, 600, "us");
  return ast;
}

// x + 2*pi*nu_det*tau, the frame-rotation readout phase
PhaseExpr detection_phase(int axis_index) {
  ExprPtr e = binary_expr('*', number_expr(2.0), symbol_expr("pi"));
  e = binary_expr('*', std::move(e), symbol_expr("nu_det"));
  e = binary_expr('*', std::move(e), symbol_expr("tau"));
  return {axis_index, std::move(e)};
}

SequenceAst ramsey_template(const CenterPreset& p) {
  SequenceAst ast;
  ast.header = header_for(p);
  ast.header.params.emplace_back(
      "nu_det", number_expr(p.defaults.nu_det_mhz, "MHz"));
  const double half_pi_us = 0.5 * p.defaults.pi_duration_us;
  auto block = [&](int last_axis) {
    std::vector<ItemNode> items;
    items.push_back(item(laser_event()));
    items.push_back(item(rf_event(number_expr(half_pi_us, "us"), axis(0),
                                  p.defaults.pi_rabi_mhz)));
    items.push_back(item(wait_event(tau_ref())));
    items.push_back(item(rf_event(number_expr(half_pi_us, "us"),
                                  detection_phase(last_axis),
                                  p.defaults.pi_rabi_mhz)));
    items.push_back(item(readout_event()));
    return items;
  };
  ast.sequence = block(0);
  ast.reference = block(2);
  ast.sweep = sweep("tau", 0, 2, 200, "ns");
  return ast;
}

SequenceAst hahn_template(const CenterPreset& p) {
  SequenceAst ast;
  ast.header = header_for(p);
  const double half_pi_us = 0.5 * p.defaults.pi_duration_us;
  auto half_tau = [] {
    return binary_expr('/', tau_ref(), number_expr(2.0));
  };
  auto block = [&](int last_axis) {
    std::vector<ItemNode> items;
    items.push_back(item(laser_event()));
    items.push_back(item(rf_event(number_expr(half_pi_us, "us"), axis(0),
                                  p.defaults.pi_rabi_mhz)));
    items.push_back(item(wait_event(half_tau())));
    items.push_back(item(rf_event(number_expr(p.defaults.pi_duration_us, "us"),
                                  axis(0), p.defaults.pi_rabi_mhz)));
    items.push_back(item(wait_event(half_tau())));
    items.push_back(item(rf_event(number_expr(half_pi_us, "us"),
                                  axis(last_axis), p.defaults.pi_rabi_mhz)));
    items.push_back(item(readout_event()));
    return items;
  };
  ast.sequence = block(0);
  ast.reference = block(2);
  ast.sweep = sweep("tau", 0, 0.2, 10, "us");
  return ast;
}

SequenceAst cpmg_template(const CenterPreset& p) {
  SequenceAst ast;
  ast.header = header_for(p);
  ast.header.noise.present = true;
  ast.header.noise.sigma = number_expr(p.defaults.noise.sigma_mhz, "MHz");
  ast.header.noise.tau_c = number_expr(p.defaults.noise.tau_c_us, "us");
  const double half_pi_us = 0.5 * p.defaults.pi_duration_us;
  const double half_tau_us = 0.5 * p.defaults.cpmg_tau_us;
  auto block = [&](int last_axis) {
    std::vector<ItemNode> items;
    items.push_back(item(laser_event()));
    items.push_back(item(rf_event(number_expr(half_pi_us, "us"), axis(0),
                                  p.defaults.pi_rabi_mhz)));
    ItemNode rep;
    rep.is_repeat = true;
    rep.count = binary_expr('*', number_expr(2.0), symbol_expr("N", true));
    rep.body.push_back(item(wait_event(number_expr(half_tau_us, "us"))));
    rep.body.push_back(
        item(rf_event(number_expr(p.defaults.pi_duration_us, "us"), axis(1),
                      p.defaults.pi_rabi_mhz)));
    rep.body.push_back(item(wait_event(number_expr(half_tau_us, "us"))));
    items.push_back(std::move(rep));
    items.push_back(item(rf_event(number_expr(half_pi_us, "us"),
                                  axis(last_axis), p.defaults.pi_rabi_mhz)));
    items.push_back(item(readout_event()));
    return items;
  };
  ast.sequence = block(0);
  ast.reference = block(2);
  ast.sweep = sweep("N", 1, 1, 8, "");
  return ast;
}

}  // namespace

const std::vector<std::string>& template_names() {
  static const std::vector<std::string> names = {"rabi", "t1", "ramsey",
                                                 "hahn", "cpmg"};
  return names;
}

TemplateKind template_by_name(const std::string& name) {
  if (name == "rabi") return TemplateKind::Rabi;
  if (name == "t1") return TemplateKind::T1;
  if (name == "ramsey") return TemplateKind::Ramsey;
  if (name == "hahn") return TemplateKind::Hahn;
  if (name == "cpmg") return TemplateKind::Cpmg;
  throw std::invalid_argument("unknown template: " + name);
}

SequenceAst make_template(TemplateKind kind, const CenterPreset& preset) {
  switch (kind) {
    case TemplateKind::Rabi:
      return rabi_template(preset);
    case TemplateKind::T1:
      return t1_template(preset);
    case TemplateKind::Ramsey:
      return ramsey_template(preset);
    case TemplateKind::Hahn:
      return hahn_template(preset);
    case TemplateKind::Cpmg:
      return cpmg_template(preset);
  }
  throw std::invalid_argument("unknown template kind");
}

std::string template_text(TemplateKind kind, const CenterPreset& preset) {
  return serialize_sequence(make_template(kind, preset));
}

}  // namespace siv
