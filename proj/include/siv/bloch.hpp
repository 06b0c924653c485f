#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace siv {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct OuNoise {
  double sigma_mhz = 0.0;  // stationary rms detuning
  double tau_c_us = 1.0;   // correlation time
  bool enabled() const { return sigma_mhz > 0.0; }
};

struct DecoherenceParams {
  double t1_us = kInf;
  double t2_us = kInf;
  double t2star_us = kInf;  // inhomogeneous scale, mirrored by the ensemble
  double w_equilibrium = 0.0;
  OuNoise noise;
};

// Enforces t1,t2 > 0, t2 <= 2 t1 and t2star <= t2 where finite.
void validate(const DecoherenceParams& relax);

struct BlochState {
  double u = 0.0;
  double v = 0.0;
  double w = 1.0;
  double norm() const;
};

struct LaserPulse {
  double duration_us = 0.0;
};
struct RfPulse {
  double duration_us = 0.0;
  double phase_rad = 0.0;
  double rabi_mhz = 0.0;
  double detuning_mhz = 0.0;  // carrier offset from resonance
};
// Zero-duration rotation, for idealized sequences.
struct IdealPulse {
  double angle_rad = 0.0;
  double phase_rad = 0.0;
};
struct Wait {
  double duration_us = 0.0;
};
struct Readout {
  double duration_us = 0.0;
};

using Event = std::variant<LaserPulse, RfPulse, IdealPulse, Wait, Readout>;

struct PulseProgram {
  std::vector<Event> events;
  std::vector<Event> reference;  // empty = single-ended readout
};

class ProgramError : public std::runtime_error {
 public:
  ProgramError(const std::string& msg, std::vector<int> indices);
  const std::vector<int>& event_indices() const { return indices_; }

 private:
  std::vector<int> indices_;
};

// Rules: starts with LaserPulse, exactly one Readout, all durations > 0.
// Throws ProgramError naming every offending event index.
void validate_program(const std::vector<Event>& events);

enum class Detuning { Delta, Lorentzian, Gaussian };

struct EnsembleSpec {
  int members = 1;
  Detuning distribution = Detuning::Delta;
  double width_mhz = 0.0;  // Lorentzian hwhm or Gaussian sigma
  std::uint64_t rng_seed = 42;

  static EnsembleSpec delta(int members = 1, std::uint64_t seed = 42);
  // hwhm = 1/(2 pi t2star) so the FID envelope is exp(-t / t2star)
  static EnsembleSpec lorentzian_from_t2star(double t2star_us, int members,
                                             std::uint64_t seed = 42);
};

// Stratified inverse-CDF detuning for one ensemble member, with the
// distribution tails truncated at the 1e-4 quantiles.
double member_detuning(const EnsembleSpec& ens, int index);

// What a long laser pulse does to w: exponential approach to polarization
// with the optical-pumping time constant.
struct PumpLink {
  double polarization = 1.0;
  double time_constant_us = 11.0;
};

BlochState apply_rf(const BlochState& s, const RfPulse& pulse,
                    const DecoherenceParams& relax);
BlochState apply_ideal(const BlochState& s, const IdealPulse& pulse);
BlochState free_evolution(const BlochState& s, double duration_us,
                          double detuning_mhz, const DecoherenceParams& relax);

struct RunResult {
  double signal = 0.0;
  double stderr_members = 0.0;
};

// Ensemble-averaged differential readout (main minus reference).
RunResult run_program(const PulseProgram& prog, const DecoherenceParams& relax,
                      const EnsembleSpec& ens, const PumpLink& pump);

struct Curve {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> yerr;
};

// Columns x_value,signal,stderr_over_members.
void write_curve_csv(const Curve& c, std::ostream& out);

// pi_duration_us = 0 requests idealized instantaneous rotations.
struct ExperimentPulses {
  double rabi_mhz = 20.0;
  double pi_duration_us = 0.0;
  bool ideal() const { return pi_duration_us <= 0.0; }
};

Curve rabi_experiment(const std::vector<double>& tau_us, double rabi_mhz,
                      const DecoherenceParams& relax, const EnsembleSpec& ens,
                      const PumpLink& pump);
Curve t1_experiment(const std::vector<double>& tau1_us,
                    const DecoherenceParams& relax, const PumpLink& pump,
                    const ExperimentPulses& pulses);
Curve ramsey_experiment(const std::vector<double>& tauf_us, double nu_det_mhz,
                        const DecoherenceParams& relax,
                        const EnsembleSpec& ens, const PumpLink& pump,
                        const ExperimentPulses& pulses);
Curve hahn_echo_experiment(const std::vector<double>& tau2_us,
                           const DecoherenceParams& relax,
                           const EnsembleSpec& ens, const PumpLink& pump,
                           const ExperimentPulses& pulses);
// n_pulses entries are refocusing-pulse counts; the x axis is
// n * (spacing + pi duration) per point.
Curve cpmg_experiment(double tau_spacing_us, const std::vector<int>& n_pulses,
                      const DecoherenceParams& relax, const EnsembleSpec& ens,
                      const PumpLink& pump, const ExperimentPulses& pulses);

}  // namespace siv
