#include "siv/presets.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>

namespace siv {

namespace {

// w_pump values frozen by calibrate_pump_rate against the 11 us / 28 us
// polarization times; rerun the calibration if the k-rates change.
CenterPreset make_v1v3() {
  CenterPreset p;
  p.name = "v1v3";
  p.system = SpinSystem::v1v3();
  p.laws = PowerLaws::v1v3();
  p.relax.t1_us = 142.1;
  p.relax.t2_us = 3.73;
  p.relax.t2star_us = 0.038;
  p.rates = {0.43480480383940406, 150.0, 150.0, 30.0, 90.0, 3.0, 10.0};
  p.pump_time_us = 11.0;
  const Populations ss = steady_state(p.rates);
  p.polarization = ss(1) - ss(0);
  p.defaults.rabi_low_mhz = 12.44;
  p.defaults.pi_duration_us = 0.0175;
  p.defaults.pi_rabi_mhz = 1.0 / (2.0 * 0.0175);
  p.defaults.rabi_decay_us = 0.09929;
  p.defaults.nu_det_mhz = 40.0;
  p.defaults.cpmg_tau_us = 0.05;
  p.defaults.noise = {0.3, 5.0};
  return p;
}

CenterPreset make_v2() {
  CenterPreset p;
  p.name = "v2";
  p.system = SpinSystem::v2();
  p.laws = PowerLaws::v2();
  p.relax.t1_us = 107.0;
  p.relax.t2_us = 3.31;
  p.relax.t2star_us = 0.031;
  p.rates = {0.10950182556665113, 150.0, 150.0, 90.0, 30.0, 3.0, 10.0};
  p.pump_time_us = 28.0;
  const Populations ss = steady_state(p.rates);
  p.polarization = ss(1) - ss(0);
  p.defaults.rabi_low_mhz = 8.36;
  p.defaults.pi_duration_us = 0.021;
  p.defaults.pi_rabi_mhz = 1.0 / (2.0 * 0.021);
  p.defaults.rabi_decay_us = 0.20481;
  p.defaults.nu_det_mhz = 40.0;
  p.defaults.cpmg_tau_us = 0.2;
  p.defaults.noise = {0.3, 5.0};
  return p;
}

}  // namespace

EnsembleSpec CenterPreset::ensemble(int members, std::uint64_t seed) const {
  return EnsembleSpec::lorentzian_from_t2star(relax.t2star_us, members, seed);
}

const CenterPreset& v1v3_preset() {
  static const CenterPreset p = make_v1v3();
  return p;
}

const CenterPreset& v2_preset() {
  static const CenterPreset p = make_v2();
  return p;
}

const CenterPreset& preset_by_name(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "v1v3" || lower == "v1/v3") return v1v3_preset();
  if (lower == "v2") return v2_preset();
  throw std::invalid_argument("unknown center preset '" + std::string(name) +
                              "' (expected v1v3 or v2)");
}

}  // namespace siv
