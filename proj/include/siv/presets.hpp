#pragma once

#include <cstdint>
#include <string_view>

#include "siv/bloch.hpp"
#include "siv/odmr.hpp"
#include "siv/pump.hpp"
#include "siv/spin.hpp"

namespace siv {

// Per-center sequence defaults inherited by the templates and the CLI.
struct ExperimentDefaults {
  double rabi_low_mhz = 0.0;    // drive used for the slow Rabi curve
  double pi_duration_us = 0.0;  // refocusing pulse length
  double pi_rabi_mhz = 0.0;     // drive that makes that length a pi pulse
  double rabi_decay_us = 0.0;   // damping scale seen in driven-Rabi fits
  double nu_det_mhz = 0.0;      // Ramsey detection detuning
  double cpmg_tau_us = 0.0;     // CPMG inter-pulse spacing
  OuNoise noise;                // detuning noise for echo-train demos
};

struct CenterPreset {
  std::string_view name;
  SpinSystem system;
  PowerLaws laws;
  DecoherenceParams relax;
  RateModel rates;      // w_pump frozen by the shipped calibration
  double pump_time_us = 0.0;  // (1 - 1/e) polarization time under rates
  double polarization = 0.0;  // steady p1 - p0 under full pumping
  ExperimentDefaults defaults;

  PumpLink pump_link() const { return {polarization, pump_time_us}; }
  EnsembleSpec ensemble(int members, std::uint64_t seed = 42) const;
};

const CenterPreset& v1v3_preset();
const CenterPreset& v2_preset();

// Accepts "v1v3" or "v2", case-insensitive; throws invalid_argument.
const CenterPreset& preset_by_name(std::string_view name);

}  // namespace siv
