#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "siv/spin.hpp"

namespace siv {

enum class Lineshape { Lorentzian, Gaussian };

// Saturation and power-broadening constants fitted per center.
// s_max_percent is a magnitude; the contrast sign lives on the center.
struct PowerLaws {
  double s_max_percent = 0.0;
  double p0_w = 1.0;
  double lw0_mhz = 1.0;
  double a_mhz_per_sqrtw = 0.0;

  static PowerLaws v1v3();
  static PowerLaws v2();
};

// S(P) = s_max * P / (p0 + P), in percent dPL/PL.
double saturation_amplitude(const PowerLaws& laws, double power_w);

// FWHM(P) = lw0 + a * sqrt(P), in MHz.
double linewidth_vs_power(const PowerLaws& laws, double power_w);

// +1 for centers whose resonance raises the PL, -1 for those lowering it.
int contrast_sign(Center label);

struct LineParams {
  double center_mhz = 0.0;
  double fwhm_mhz = 1.0;
  double amplitude_percent = 0.0;  // signed apex value
  Lineshape shape = Lineshape::Lorentzian;
};

// Apex-normalized profile times the signed amplitude.
double line_profile(const LineParams& line, double f_mhz);

struct CenterModel {
  SpinSystem sys;
  PowerLaws laws;
};

struct CwSettings {
  double power_w = 1.6;
  Lineshape shape = Lineshape::Lorentzian;
  double min_strength = 1e-4;
  DriveAxis drive = DriveAxis::X;
  // Optional RF transfer function as (frequency MHz, scale) knots with
  // linear interpolation, clamped outside the knot range. Empty = flat 1.
  std::vector<std::pair<double, double>> rf_transfer;
};

// dPL/PL in percent on the frequency grid for one static field.
std::vector<double> cw_spectrum(const std::vector<CenterModel>& centers,
                                const FieldVector& b,
                                const std::vector<double>& f_grid_mhz,
                                const CwSettings& settings);

struct SpectrumMap {
  std::vector<double> b_mt;    // row axis
  std::vector<double> f_mhz;   // column axis
  std::vector<double> values;  // row-major dPL/PL percent

  double at(size_t bi, size_t fi) const { return values[bi * f_mhz.size() + fi]; }
};

// One cw_spectrum row per axial-field grid value.
SpectrumMap field_map(const std::vector<CenterModel>& centers,
                      const std::vector<double>& bz_grid_mt,
                      const std::vector<double>& f_grid_mhz,
                      const CwSettings& settings);

// Long-form CSV: b_mT,f_MHz,dpl_percent.
void write_map_csv(const SpectrumMap& map, std::ostream& out);
// JSON object with both axes and the row-major value matrix.
void write_map_json(const SpectrumMap& map, std::ostream& out);

}  // namespace siv
