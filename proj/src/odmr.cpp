#include "siv/odmr.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "json.hpp"
#include "siv/csv.hpp"

namespace siv {

PowerLaws PowerLaws::v1v3() { return {0.2087, 0.8573, 6.193, 2.713}; }
PowerLaws PowerLaws::v2() { return {0.07112, 0.8834, 7.877, 2.579}; }

double saturation_amplitude(const PowerLaws& laws, double power_w) {
  if (power_w < 0.0) throw std::domain_error("pump power must be >= 0");
  return laws.s_max_percent * power_w / (laws.p0_w + power_w);
}

double linewidth_vs_power(const PowerLaws& laws, double power_w) {
  if (power_w < 0.0) throw std::domain_error("pump power must be >= 0");
  return laws.lw0_mhz + laws.a_mhz_per_sqrtw * std::sqrt(power_w);
}

int contrast_sign(Center label) { return label == Center::V1V3 ? +1 : -1; }

double line_profile(const LineParams& line, double f_mhz) {
  if (line.fwhm_mhz <= 0.0) throw std::domain_error("linewidth must be > 0");
  const double x = f_mhz - line.center_mhz;
  if (line.shape == Lineshape::Lorentzian) {
    const double h = 0.5 * line.fwhm_mhz;
    return line.amplitude_percent * h * h / (x * x + h * h);
  }
  const double ln2 = 0.6931471805599453;
  const double arg = x / line.fwhm_mhz;
  return line.amplitude_percent * std::exp(-4.0 * ln2 * arg * arg);
}

namespace {

double transfer_scale(const std::vector<std::pair<double, double>>& knots,
                      double f) {
  if (knots.empty()) return 1.0;
  if (f <= knots.front().first) return knots.front().second;
  if (f >= knots.back().first) return knots.back().second;
  for (size_t i = 1; i < knots.size(); ++i) {
    if (f <= knots[i].first) {
      const auto& [f0, s0] = knots[i - 1];
      const auto& [f1, s1] = knots[i];
      const double t = (f - f0) / (f1 - f0);
      return s0 + t * (s1 - s0);
    }
  }
  return knots.back().second;
}

// Total zero-field line strength; normalizes matrix-element weights so the
// zero-field resonance carries the full fitted saturation amplitude.
double zero_field_strength(const SpinSystem& sys, double min_strength,
                           DriveAxis drive) {
  double total = 0.0;
  for (const Transition& t : transition_table(sys, {}, min_strength, drive))
    total += t.strength;
  return total;
}

}  // namespace

std::vector<double> cw_spectrum(const std::vector<CenterModel>& centers,
                                const FieldVector& b,
                                const std::vector<double>& f_grid_mhz,
                                const CwSettings& settings) {
  std::vector<double> out(f_grid_mhz.size(), 0.0);
  for (const CenterModel& cm : centers) {
    const double amp =
        contrast_sign(cm.sys.label) * saturation_amplitude(cm.laws, settings.power_w);
    const double fwhm = linewidth_vs_power(cm.laws, settings.power_w);
    const double norm =
        zero_field_strength(cm.sys, settings.min_strength, settings.drive);
    const auto lines =
        transition_table(cm.sys, b, settings.min_strength, settings.drive);
    for (const Transition& t : lines) {
      LineParams lp{t.frequency_mhz, fwhm, amp * t.strength / norm,
                    settings.shape};
      lp.amplitude_percent *=
          transfer_scale(settings.rf_transfer, t.frequency_mhz);
      for (size_t i = 0; i < f_grid_mhz.size(); ++i)
        out[i] += line_profile(lp, f_grid_mhz[i]);
    }
  }
  return out;
}

SpectrumMap field_map(const std::vector<CenterModel>& centers,
                      const std::vector<double>& bz_grid_mt,
                      const std::vector<double>& f_grid_mhz,
                      const CwSettings& settings) {
  SpectrumMap map;
  map.b_mt = bz_grid_mt;
  map.f_mhz = f_grid_mhz;
  map.values.resize(bz_grid_mt.size() * f_grid_mhz.size());
  for (size_t bi = 0; bi < bz_grid_mt.size(); ++bi) {
    const std::vector<double> row =
        cw_spectrum(centers, {0, 0, bz_grid_mt[bi]}, f_grid_mhz, settings);
    std::copy(row.begin(), row.end(),
              map.values.begin() + bi * f_grid_mhz.size());
  }
  return map;
}

void write_map_csv(const SpectrumMap& map, std::ostream& out) {
  out << "b_mT,f_MHz,dpl_percent\n";
  for (size_t bi = 0; bi < map.b_mt.size(); ++bi)
    for (size_t fi = 0; fi < map.f_mhz.size(); ++fi)
      out << format_double(map.b_mt[bi]) << ',' << format_double(map.f_mhz[fi])
          << ',' << format_double(map.at(bi, fi)) << "\n";
}

void write_map_json(const SpectrumMap& map, std::ostream& out) {
  nlohmann::json j;
  j["b_mT"] = map.b_mt;
  j["f_MHz"] = map.f_mhz;
  j["dpl_percent"] = map.values;  // row-major, len(b_mT) x len(f_MHz)
  out << j.dump(2) << "\n";
}

}  // namespace siv
