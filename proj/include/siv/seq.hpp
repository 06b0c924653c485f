#pragma once
// Text format for pulse programs: a header block selecting the color center
// and overrides, a sequence block (optional reference block), and a single
// sweep declaration. Sources compile to one PulseProgram per grid point.
//
// Grammar lives in docs/grammar.md. Durations carry explicit units (ns, us,
// ms), frequencies are MHz, phases are radians with axis shorthands
// (x, y, -x, -y). repeat <count> { ... } expands at compile time.

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "siv/bloch.hpp"
#include "siv/presets.hpp"

namespace siv {

enum class SeqErrorKind {
  Lexical,
  Syntax,
  UnknownKeyword,
  UnresolvedSymbol,
  DuplicateReadout,
  MissingReadout,
  NonpositiveDuration,
  BadSweep,
  DimensionError,
  GridEvaluation,
};

const char* seq_error_kind_name(SeqErrorKind kind);

class SeqError : public std::runtime_error {
 public:
  SeqError(SeqErrorKind kind, int line, int col, const std::string& message,
           std::string excerpt);
  SeqErrorKind kind() const { return kind_; }
  int line() const { return line_; }
  int col() const { return col_; }
  // offending source line plus a caret marker underneath
  const std::string& excerpt() const { return excerpt_; }

 private:
  SeqErrorKind kind_;
  int line_;
  int col_;
  std::string excerpt_;
};

enum class Dim { None, Time, Freq };

double unit_scale(const std::string& unit);  // to canonical us / MHz
Dim unit_dim(const std::string& unit);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum Kind { Number, Symbol, Binary, Negate };
  Kind kind = Number;
  double value = 0.0;   // Number: literal as written, unscaled
  std::string unit;     // Number: "", "ns", "us", "ms" or "MHz"
  std::string name;     // Symbol
  bool dollar = false;  // Symbol spelled with a leading $
  char op = 0;          // Binary: + - * /
  ExprPtr lhs, rhs;     // Binary both; Negate uses lhs
  int line = 0, col = 0;
};

ExprPtr number_expr(double value, const std::string& unit = "");
ExprPtr symbol_expr(const std::string& name, bool dollar = false);
ExprPtr binary_expr(char op, ExprPtr lhs, ExprPtr rhs);
ExprPtr negate_expr(ExprPtr inner);
bool expr_equal(const ExprPtr& a, const ExprPtr& b);

struct PhaseExpr {
  int axis = -1;   // 0 x, 1 y, 2 -x, 3 -y; -1 when pure expression
  ExprPtr offset;  // radians, may be null when an axis is given
};
bool phase_equal(const PhaseExpr& a, const PhaseExpr& b);
double axis_phase_rad(int axis);

struct EventNode {
  enum Kind { Laser, Rf, Wait, Readout };
  Kind kind = Laser;
  ExprPtr dur;
  PhaseExpr phase;  // rf only
  ExprPtr rabi;     // rf only
  ExprPtr det;      // rf only, optional
  int line = 0, col = 0;
};

struct ItemNode {
  bool is_repeat = false;
  EventNode event;             // when !is_repeat
  ExprPtr count;               // when is_repeat
  std::vector<ItemNode> body;  // when is_repeat
};
bool item_equal(const ItemNode& a, const ItemNode& b);

struct EnsembleStmt {
  bool present = false;
  ExprPtr members;
  ExprPtr width;
  std::string dist;  // lorentzian | gaussian | delta
};

struct NoiseStmt {
  bool present = false;
  ExprPtr sigma;
  ExprPtr tau_c;
};

struct HeaderNode {
  std::string center;
  std::vector<std::pair<std::string, ExprPtr>> params;  // declaration order
  ExprPtr t1;  // optional relaxation overrides
  ExprPtr t2;
  EnsembleStmt ensemble;
  NoiseStmt noise;
};

struct SweepNode {
  std::string var;
  double start = 0.0;  // all three in the written unit
  double step = 0.0;
  double stop = 0.0;
  std::string unit;  // "" sweeps a dimensionless count
  int line = 0, col = 0;
};

struct SequenceAst {
  HeaderNode header;
  std::vector<ItemNode> sequence;
  std::optional<std::vector<ItemNode>> reference;
  SweepNode sweep;
};
bool ast_equal(const SequenceAst& a, const SequenceAst& b);

SequenceAst parse_sequence(const std::string& text,
                           const std::string& source_name = "<memory>");
std::string serialize_sequence(const SequenceAst& ast);

// canonical-unit grid values; empty when stop < start
std::vector<double> sweep_grid(const SweepNode& sweep);

struct CompiledFamily {
  std::string sweep_var;
  Dim sweep_dim = Dim::None;
  std::vector<double> grid;
  std::vector<PulseProgram> programs;  // one per grid point
};
CompiledFamily compile_sequence(const SequenceAst& ast);

// center preset with header t1/t2/noise overrides applied, plus the
// ensemble the header requests (preset default otherwise)
struct RunSetup {
  CenterPreset preset;
  EnsembleSpec ensemble;
};
RunSetup resolve_run_setup(const SequenceAst& ast, int default_members = 400,
                           std::uint64_t seed = 42);

enum class TemplateKind { Rabi, T1, Ramsey, Hahn, Cpmg };
const std::vector<std::string>& template_names();
TemplateKind template_by_name(const std::string& name);
SequenceAst make_template(TemplateKind kind, const CenterPreset& preset);
std::string template_text(TemplateKind kind, const CenterPreset& preset);

}  // namespace siv
