// Command-line front end: energy levels, cw field maps, pulse-sequence
// execution, synthetic datasets and pump transients as CSV or JSON.
// Exit codes: 0 success, 2 usage/parse error, 3 fit non-convergence.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "siv/csv.hpp"
#include "siv/fit.hpp"
#include "siv/odmr.hpp"
#include "siv/presets.hpp"
#include "siv/pump.hpp"
#include "siv/seq.hpp"
#include "siv/spin.hpp"

namespace {

using nlohmann::ordered_json;
using namespace siv;

constexpr int kExitUsage = 2;
constexpr int kExitNoConvergence = 3;

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw std::invalid_argument("grid needs at least one point");
  if (!(hi >= lo)) throw std::invalid_argument("grid range is reversed");
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i)
    v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return v;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc{} || res.ptr != item.data() + item.size())
      throw std::invalid_argument("bad number '" + item + "' in list");
    out.push_back(v);
    pos = comma + 1;
    if (comma == text.size()) break;
  }
  return out;
}

ordered_json columns_json(const std::vector<std::string>& headers,
                          const std::vector<const std::vector<double>*>& cols) {
  ordered_json j;
  for (size_t i = 0; i < headers.size(); ++i) j[headers[i]] = *cols[i];
  return j;
}

// Writes to --output when given, stdout otherwise.
struct Output {
  std::ofstream file;
  std::ostream* os = &std::cout;

  explicit Output(const std::string& path) {
    if (path.empty()) return;
    file.open(path, std::ios::binary);
    if (!file.good())
      throw std::invalid_argument("cannot open output file: " + path);
    os = &file;
  }
  void finish(const std::string& path) {
    os->flush();
    if (!os->good())
      throw std::runtime_error("failed writing output" +
                               (path.empty() ? "" : ": " + path));
  }
};

// ---------------------------------------------------------------------------
// levels

struct LevelsArgs {
  std::string center = "v1v3";
  std::string format = "csv";
  std::string output;
  double bmin = 0.0, bmax = 9.0;
  int points = 91;
};

// Axial-field eigenvalues are analytic; m runs -3/2..+3/2.
int cmd_levels(const LevelsArgs& a) {
  const CenterPreset& preset = preset_by_name(a.center);
  const SpinSystem& sys = preset.system;
  const double gamma = sys.gamma_mhz_per_mt();
  const std::vector<double> b = linspace(a.bmin, a.bmax, a.points);

  const auto level = [&](double bz, double m) {
    return 0.5 * sys.two_d_mhz * (m * m - 1.25) + gamma * bz * m;
  };
  std::vector<double> e_m32(b.size()), e_m12(b.size()), e_p12(b.size()),
      e_p32(b.size()), nu1(b.size()), nu2(b.size()), central(b.size());
  for (size_t i = 0; i < b.size(); ++i) {
    e_m32[i] = level(b[i], -1.5);
    e_m12[i] = level(b[i], -0.5);
    e_p12[i] = level(b[i], 0.5);
    e_p32[i] = level(b[i], 1.5);
    nu1[i] = std::abs(std::abs(sys.two_d_mhz) - gamma * b[i]);
    nu2[i] = std::abs(sys.two_d_mhz) + gamma * b[i];
    central[i] = gamma * b[i];
  }

  const std::vector<std::string> headers = {
      "B_mT",    "E_minus32_MHz", "E_minus12_MHz", "E_plus12_MHz",
      "E_plus32_MHz", "nu1_MHz", "nu2_MHz",       "central_MHz"};
  const std::vector<const std::vector<double>*> cols = {
      &b, &e_m32, &e_m12, &e_p12, &e_p32, &nu1, &nu2, &central};

  Output out(a.output);
  if (a.format == "json") {
    ordered_json j;
    j["center"] = std::string(preset.name);
    j["columns"] = columns_json(headers, cols);
    *out.os << j.dump(2) << "\n";
  } else {
    write_table_csv(*out.os, headers, cols);
  }
  out.finish(a.output);
  return 0;
}

// ---------------------------------------------------------------------------
// map

struct MapArgs {
  std::string centers = "both";
  std::string format = "csv";
  std::string output;
  std::string shape = "lorentzian";
  double bmin = 0.0, bmax = 9.0;
  double fmin = 0.0, fmax = 300.0;
  int brows = 181, fcols = 601;
  double power = 1.6;
};

int cmd_map(const MapArgs& a) {
  std::vector<CenterModel> centers;
  if (a.centers == "v1v3" || a.centers == "both")
    centers.push_back({SpinSystem::v1v3(), PowerLaws::v1v3()});
  if (a.centers == "v2" || a.centers == "both")
    centers.push_back({SpinSystem::v2(), PowerLaws::v2()});
  if (centers.empty())
    throw std::invalid_argument("unknown center set '" + a.centers + "'");
  if (a.power < 0.0) throw std::invalid_argument("power must be >= 0");

  CwSettings settings;
  settings.power_w = a.power;
  settings.shape =
      a.shape == "gaussian" ? Lineshape::Gaussian : Lineshape::Lorentzian;

  const SpectrumMap map = field_map(centers, linspace(a.bmin, a.bmax, a.brows),
                                    linspace(a.fmin, a.fmax, a.fcols),
                                    settings);
  Output out(a.output);
  if (a.format == "json")
    write_map_json(map, *out.os);
  else
    write_map_csv(map, *out.os);
  out.finish(a.output);
  return 0;
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
  std::string sequence;
  std::string center = "v1v3";
  std::string format = "csv";
  std::string output;
  std::string fit_model = "auto";
  int members = 400;
  std::uint64_t seed = 42;
  bool fit = false;
  bool dry_run = false;
};

ModelKind model_by_name(const std::string& name) {
  if (name == "rabi") return ModelKind::Rabi;
  if (name == "fid") return ModelKind::Fid;
  if (name == "expdecay") return ModelKind::ExpDecay;
  if (name == "stretchedexp") return ModelKind::StretchedExp;
  if (name == "saturation") return ModelKind::Saturation;
  if (name == "sqrtlinewidth") return ModelKind::SqrtLinewidth;
  throw std::invalid_argument("unknown fit model '" + name + "'");
}

// A sequence structurally identical to a shipped template gets that
// template's canonical fit model.
ModelKind infer_fit_model(const SequenceAst& ast) {
  const CenterPreset& preset = preset_by_name(ast.header.center);
  const std::pair<TemplateKind, ModelKind> map[] = {
      {TemplateKind::Rabi, ModelKind::Rabi},
      {TemplateKind::T1, ModelKind::ExpDecay},
      {TemplateKind::Ramsey, ModelKind::Fid},
      {TemplateKind::Hahn, ModelKind::ExpDecay},
      {TemplateKind::Cpmg, ModelKind::StretchedExp},
  };
  for (const auto& [kind, model] : map)
    if (ast_equal(ast, make_template(kind, preset))) return model;
  throw std::invalid_argument(
      "cannot infer a fit model for this sequence; pass --fit-model");
}

const char* sweep_unit_name(Dim dim) {
  switch (dim) {
    case Dim::Time: return "us";
    case Dim::Freq: return "MHz";
    case Dim::None: return "count";
  }
  return "";
}

int cmd_run(const RunArgs& a) {
  SequenceAst ast;
  std::string label = a.sequence;
  const auto& names = template_names();
  if (std::find(names.begin(), names.end(), a.sequence) != names.end()) {
    ast = make_template(template_by_name(a.sequence), preset_by_name(a.center));
    label = a.sequence + "/" + a.center;
  } else {
    std::ifstream in(a.sequence, std::ios::binary);
    if (!in.good())
      throw std::invalid_argument("cannot read sequence file: " + a.sequence);
    std::ostringstream ss;
    ss << in.rdbuf();
    ast = parse_sequence(ss.str(), a.sequence);
  }

  const CompiledFamily family = compile_sequence(ast);
  Output out(a.output);
  if (a.dry_run) {
    *out.os << family.programs.size() << "\n";
    out.finish(a.output);
    return 0;
  }

  const RunSetup setup = resolve_run_setup(ast, a.members, a.seed);
  Curve curve;
  curve.x = family.grid;
  curve.y.resize(family.programs.size());
  curve.yerr.resize(family.programs.size());
  for (size_t i = 0; i < family.programs.size(); ++i) {
    const RunResult r = run_program(family.programs[i], setup.preset.relax,
                                    setup.ensemble, setup.preset.pump_link());
    curve.y[i] = r.signal;
    curve.yerr[i] = r.stderr_members;
  }

  FitResult fit_result;
  bool fitted = false;
  if (a.fit) {
    const ModelKind kind = a.fit_model == "auto" ? infer_fit_model(ast)
                                                 : model_by_name(a.fit_model);
    XyData data;
    data.x = curve.x;
    data.y = curve.y;
    bool weighted = !curve.yerr.empty();
    for (double s : curve.yerr) weighted = weighted && s > 0.0;
    if (weighted) data.sigma = curve.yerr;
    FitOptions opts;
    opts.seed = a.seed;
    fit_result = fit(kind, data, initial_guess(kind, data).params, opts);
    fitted = true;
  }

  if (a.format == "json") {
    ordered_json j;
    j["sequence"] = label;
    j["center"] = ast.header.center;
    j["sweep_var"] = family.sweep_var;
    j["x_unit"] = sweep_unit_name(family.sweep_dim);
    j["x"] = curve.x;
    j["signal"] = curve.y;
    j["stderr"] = curve.yerr;
    if (fitted) j["fit"] = ordered_json::parse(fit_result_json(fit_result));
    *out.os << j.dump(2) << "\n";
    out.finish(a.output);
  } else {
    write_curve_csv(curve, *out.os);
    if (fitted && a.output.empty()) {
      const std::string one_line =
          ordered_json::parse(fit_result_json(fit_result)).dump();
      *out.os << "# fit " << one_line << "\n";
    }
    out.finish(a.output);
    if (fitted && !a.output.empty()) {
      std::string side = a.output;
      if (side.size() > 4 && side.substr(side.size() - 4) == ".csv")
        side.resize(side.size() - 4);
      side += ".fit.json";
      Output fout(side);
      *fout.os << fit_result_json(fit_result);
      fout.finish(side);
    }
  }
  if (fitted && !fit_result.converged) {
    std::cerr << "sivsim: fit did not converge: " << fit_result.diagnostic
              << "\n";
    return kExitNoConvergence;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string model;
  std::string params;
  std::string format = "csv";
  std::string output;
  double xmin = 0.0, xmax = 1.0;
  int points = 200;
  double noise = 0.0;
  std::uint64_t seed = 42;
};

int cmd_synth(const SynthArgs& a) {
  if (a.points < 1)
    throw std::invalid_argument("points must be >= 1 (empty dataset)");
  if (a.noise < 0.0) throw std::invalid_argument("noise must be >= 0");
  DecayModel model{model_by_name(a.model), parse_double_list(a.params)};
  validate_model(model);

  const std::vector<double> x = linspace(a.xmin, a.xmax, a.points);
  std::vector<double> y = evaluate(model, x);
  if (a.noise > 0.0) {
    std::mt19937_64 rng(a.seed);
    std::normal_distribution<double> gauss(0.0, a.noise);
    for (double& v : y) v += gauss(rng);
  }

  Output out(a.output);
  if (a.format == "json") {
    ordered_json j;
    j["model"] = a.model;
    const auto& names = param_names(model.kind);
    for (size_t i = 0; i < names.size(); ++i)
      j["params"][names[i]] = model.params[i];
    j["noise"] = a.noise;
    j["seed"] = a.seed;
    j["x"] = x;
    j["y"] = y;
    if (a.noise > 0.0)
      j["sigma"] = std::vector<double>(x.size(), a.noise);
    *out.os << j.dump(2) << "\n";
  } else {
    *out.os << "# sivsim synth model=" << a.model << " params=" << a.params
            << " noise=" << format_double(a.noise) << " seed=" << a.seed
            << " points=" << a.points << " xmin=" << format_double(a.xmin)
            << " xmax=" << format_double(a.xmax) << "\n";
    if (a.noise > 0.0) {
      const std::vector<double> sigma(x.size(), a.noise);
      write_table_csv(*out.os, {"x", "y", "sigma"}, {&x, &y, &sigma});
    } else {
      write_table_csv(*out.os, {"x", "y"}, {&x, &y});
    }
  }
  out.finish(a.output);
  return 0;
}

// ---------------------------------------------------------------------------
// pump

struct PumpArgs {
  std::string center = "v1v3";
  std::string rates_file;
  std::string format = "csv";
  std::string output;
  double w_pump = -1.0;  // < 0 = keep the preset rate
  double duration = 120.0;
  double dt = 0.25;
};

int cmd_pump(const PumpArgs& a) {
  RateModel rates;
  if (!a.rates_file.empty()) {
    std::ifstream in(a.rates_file);
    if (!in.good())
      throw std::invalid_argument("cannot read rates file: " + a.rates_file);
    rates = load_rate_model(in, a.rates_file);
  } else {
    rates = preset_by_name(a.center).rates;
  }
  if (a.w_pump >= 0.0) rates.w_pump = a.w_pump;
  if (!(a.duration > 0.0) || !(a.dt > 0.0) || a.dt > a.duration)
    throw std::invalid_argument("need 0 < dt <= duration");

  const PumpTransient tr = polarization_transient(
      rates, equilibrium_populations(), a.duration, a.dt);
  std::vector<std::vector<double>> p(5, std::vector<double>(tr.t_us.size()));
  for (size_t i = 0; i < tr.t_us.size(); ++i)
    for (int s = 0; s < 5; ++s) p[s][i] = tr.populations[i](s);

  const std::vector<std::string> headers = {"t_us", "p0", "p1", "p2",
                                            "p3",   "p4", "polarization"};
  const std::vector<const std::vector<double>*> cols = {
      &tr.t_us, &p[0], &p[1], &p[2], &p[3], &p[4], &tr.polarization};

  Output out(a.output);
  if (a.format == "json") {
    *out.os << columns_json(headers, cols).dump(2) << "\n";
  } else {
    write_table_csv(*out.os, headers, cols);
  }
  out.finish(a.output);
  return 0;
}

void add_io_options(CLI::App* cmd, std::string& format, std::string& output) {
  cmd->fallthrough();  // lets --config appear after the subcommand
  cmd->add_option("--format", format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--output,-o", output, "output file (default stdout)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "spin-3/2 silicon-vacancy ODMR simulation toolkit\n"
      "Set SIVSIM_THREADS to parallelize ensemble averaging."};
  app.require_subcommand(1);
  app.set_config("--config", "", "config file merged under flags");
  app.set_version_flag("--version", "sivsim 1.0.0");

  LevelsArgs levels;
  CLI::App* c_levels = app.add_subcommand(
      "levels", "energy levels and transition branches vs axial field");
  c_levels->add_option("--center", levels.center, "v1v3 or v2");
  c_levels->add_option("--bmin", levels.bmin, "field start, mT");
  c_levels->add_option("--bmax", levels.bmax, "field stop, mT");
  c_levels->add_option("--points", levels.points, "grid points");
  add_io_options(c_levels, levels.format, levels.output);

  MapArgs map;
  CLI::App* c_map =
      app.add_subcommand("map", "cw spectra over a field/frequency grid");
  c_map->add_option("--centers", map.centers, "v1v3, v2 or both");
  c_map->add_option("--bmin", map.bmin, "field start, mT");
  c_map->add_option("--bmax", map.bmax, "field stop, mT");
  c_map->add_option("--brows", map.brows, "field grid rows");
  c_map->add_option("--fmin", map.fmin, "frequency start, MHz");
  c_map->add_option("--fmax", map.fmax, "frequency stop, MHz");
  c_map->add_option("--fcols", map.fcols, "frequency grid columns");
  c_map->add_option("--power", map.power, "rf power, W");
  c_map->add_option("--shape", map.shape, "line shape")
      ->check(CLI::IsMember({"lorentzian", "gaussian"}));
  add_io_options(c_map, map.format, map.output);

  RunArgs run;
  CLI::App* c_run = app.add_subcommand(
      "run", "compile a pulse-sequence file or template and execute it");
  c_run->add_option("sequence", run.sequence,
                    "template name (rabi, t1, ramsey, hahn, cpmg) or .seq path")
      ->required();
  c_run->add_option("--center", run.center, "preset for template names");
  c_run->add_option("--members", run.members, "ensemble size fallback")
      ->check(CLI::PositiveNumber);
  c_run->add_option("--seed", run.seed, "ensemble rng seed");
  c_run->add_flag("--fit", run.fit, "fit the resulting curve");
  c_run->add_option("--fit-model", run.fit_model, "fit model")
      ->check(CLI::IsMember({"auto", "rabi", "fid", "expdecay", "stretchedexp",
                             "saturation", "sqrtlinewidth"}));
  c_run->add_flag("--dry-run", run.dry_run,
                  "print the compiled program count and exit");
  add_io_options(c_run, run.format, run.output);

  SynthArgs synth;
  CLI::App* c_synth =
      app.add_subcommand("synth", "synthetic dataset from a closed-form model");
  c_synth->add_option("--model", synth.model, "model kind")
      ->required()
      ->check(CLI::IsMember({"rabi", "fid", "expdecay", "stretchedexp",
                             "saturation", "sqrtlinewidth"}));
  c_synth->add_option("--params", synth.params, "comma-separated parameters")
      ->required();
  c_synth->add_option("--xmin", synth.xmin, "x start");
  c_synth->add_option("--xmax", synth.xmax, "x stop");
  c_synth->add_option("--points", synth.points, "sample count");
  c_synth->add_option("--noise", synth.noise, "gaussian noise sigma");
  c_synth->add_option("--seed", synth.seed, "noise rng seed");
  add_io_options(c_synth, synth.format, synth.output);

  PumpArgs pump;
  CLI::App* c_pump =
      app.add_subcommand("pump", "five-level optical pumping transient");
  c_pump->add_option("--center", pump.center, "v1v3 or v2");
  c_pump->add_option("--rates", pump.rates_file,
                     "rate model file (json or key = value)");
  c_pump->add_option("--w-pump", pump.w_pump, "override pump rate, 1/us");
  c_pump->add_option("--duration", pump.duration, "transient length, us");
  c_pump->add_option("--dt", pump.dt, "sample spacing, us");
  add_io_options(c_pump, pump.format, pump.output);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*c_levels) return cmd_levels(levels);
    if (*c_map) return cmd_map(map);
    if (*c_run) return cmd_run(run);
    if (*c_synth) return cmd_synth(synth);
    if (*c_pump) return cmd_pump(pump);
  } catch (const SeqError& e) {
    std::cerr << "sivsim: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "sivsim: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
