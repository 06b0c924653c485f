#include "siv/bloch.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>

#include "siv/csv.hpp"
#include "siv/parallel.hpp"

namespace siv {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInitLaserUs = 300.0;
constexpr double kReadoutUs = 4.0;
constexpr double kQuantileTail = 1e-4;

// Acklam's rational approximation of the standard normal quantile,
// sharpened by one Halley step.
double normal_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(kTwoPi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

struct Propagator {
  Eigen::Matrix3d m;
  Eigen::Vector3d c;
};

Propagator rf_propagator(const RfPulse& p, const DecoherenceParams& relax) {
  const double wx = kTwoPi * p.rabi_mhz * std::cos(p.phase_rad);
  const double wy = kTwoPi * p.rabi_mhz * std::sin(p.phase_rad);
  const double wz = kTwoPi * p.detuning_mhz;
  const double g2 = std::isinf(relax.t2_us) ? 0.0 : 1.0 / relax.t2_us;
  const double g1 = std::isinf(relax.t1_us) ? 0.0 : 1.0 / relax.t1_us;
  Eigen::Matrix3d a;
  a << -g2, -wz, wy, wz, -g2, -wx, -wy, wx, -g1;
  Propagator out;
  const double bz = relax.w_equilibrium * g1;
  if (bz == 0.0) {
    out.m = (a * p.duration_us).exp();
    out.c.setZero();
  } else {
    Eigen::Matrix4d aug = Eigen::Matrix4d::Zero();
    aug.topLeftCorner<3, 3>() = a;
    aug(2, 3) = bz;
    const Eigen::Matrix4d e = (aug * p.duration_us).exp();
    out.m = e.topLeftCorner<3, 3>();
    out.c = e.topRightCorner<3, 1>();
  }
  return out;
}

BlochState apply(const Propagator& p, const BlochState& s) {
  const Eigen::Vector3d r =
      p.m * Eigen::Vector3d(s.u, s.v, s.w) + p.c;
  return {r(0), r(1), r(2)};
}

// Mean-reverting Gaussian detuning noise, sampled exactly per interval.
class OuPath {
 public:
  OuPath(const OuNoise& noise, std::uint64_t seed, std::uint64_t member,
         std::uint64_t arm)
      : noise_(noise) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(member),
                      static_cast<std::uint32_t>(arm)};
    rng_.seed(seq);
    value_ = noise_.sigma_mhz * gauss_(rng_);
  }
  double value() const { return value_; }
  void advance(double dt_us) {
    const double a = std::exp(-dt_us / noise_.tau_c_us);
    value_ = value_ * a +
             noise_.sigma_mhz * std::sqrt(1.0 - a * a) * gauss_(rng_);
  }

 private:
  OuNoise noise_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_;
  double value_ = 0.0;
};

struct PulseKey {
  double dur, phase, rabi, det;
  bool operator==(const PulseKey&) const = default;
};

class SingleRun {
 public:
  SingleRun(const DecoherenceParams& relax, const PumpLink& pump,
            double member_detuning_mhz, std::uint64_t seed,
            std::uint64_t member, std::uint64_t arm)
      : relax_(relax),
        pump_(pump),
        delta_(member_detuning_mhz),
        ou_(relax.noise.enabled()
                ? std::optional<OuPath>(OuPath(relax.noise, seed, member, arm))
                : std::nullopt) {}

  double run(const std::vector<Event>& events) {
    BlochState s{0.0, 0.0, 0.0};  // thermal start, laser init follows
    double signal = 0.0;
    for (const Event& ev : events) {
      std::visit(
          [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, LaserPulse>) {
              s.u = 0.0;
              s.v = 0.0;
              s.w = pump_.polarization +
                    (s.w - pump_.polarization) *
                        std::exp(-e.duration_us / pump_.time_constant_us);
              advance_noise(e.duration_us);
            } else if constexpr (std::is_same_v<T, RfPulse>) {
              RfPulse p = e;
              p.detuning_mhz += delta_;
              // noise is frozen across the (short) drive interval
              s = apply(cached(p), s);
              advance_noise(e.duration_us);
            } else if constexpr (std::is_same_v<T, IdealPulse>) {
              s = apply_ideal(s, e);
            } else if constexpr (std::is_same_v<T, Wait>) {
              free_with_noise(s, e.duration_us);
            } else {  // Readout
              signal = s.w;
            }
          },
          ev);
    }
    return signal;
  }

 private:
  void advance_noise(double dt) {
    if (ou_) ou_->advance(dt);
  }

  void free_with_noise(BlochState& s, double duration) {
    if (!ou_) {
      s = free_evolution(s, duration, delta_, relax_);
      return;
    }
    const double step = relax_.noise.tau_c_us / 16.0;
    double left = duration;
    while (left > 0.0) {
      const double dt = std::min(step, left);
      s = free_evolution(s, dt, delta_ + ou_->value(), relax_);
      ou_->advance(dt);
      left -= dt;
    }
  }

  const Propagator& cached(const RfPulse& p) {
    const PulseKey key{p.duration_us, p.phase_rad, p.rabi_mhz, p.detuning_mhz};
    for (const auto& [k, prop] : cache_)
      if (k == key) return prop;
    cache_.emplace_back(key, rf_propagator(p, relax_));
    return cache_.back().second;
  }

  DecoherenceParams relax_;
  PumpLink pump_;
  double delta_;
  std::optional<OuPath> ou_;
  std::vector<std::pair<PulseKey, Propagator>> cache_;
};

void normalize_curve(Curve& c, double scale) {
  if (scale == 0.0 || !std::isfinite(scale)) return;
  for (double& v : c.y) v /= scale;
  for (double& v : c.yerr) v /= std::abs(scale);
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

Event pi_pulse(const ExperimentPulses& p, double phase) {
  if (p.ideal()) return IdealPulse{std::numbers::pi, phase};
  return RfPulse{p.pi_duration_us, phase, p.rabi_mhz, 0.0};
}

Event half_pi_pulse(const ExperimentPulses& p, double phase) {
  if (p.ideal()) return IdealPulse{0.5 * std::numbers::pi, phase};
  return RfPulse{0.5 * p.pi_duration_us, phase, p.rabi_mhz, 0.0};
}

}  // namespace

void validate(const DecoherenceParams& relax) {
  if (!(relax.t1_us > 0.0) || !(relax.t2_us > 0.0))
    throw std::invalid_argument("relaxation times must be > 0");
  if (relax.t2_us > 2.0 * relax.t1_us + 1e-12)
    throw std::invalid_argument("t2 must not exceed 2 t1");
  if (std::isfinite(relax.t2star_us) && std::isfinite(relax.t2_us) &&
      relax.t2star_us > relax.t2_us + 1e-12)
    throw std::invalid_argument("t2star must not exceed t2");
  if (relax.noise.enabled() && !(relax.noise.tau_c_us > 0.0))
    throw std::invalid_argument("noise correlation time must be > 0");
}

double BlochState::norm() const { return std::sqrt(u * u + v * v + w * w); }

ProgramError::ProgramError(const std::string& msg, std::vector<int> indices)
    : std::runtime_error(msg), indices_(std::move(indices)) {}

void validate_program(const std::vector<Event>& events) {
  std::vector<int> bad;
  std::string why;
  auto complain = [&](int idx, const std::string& what) {
    bad.push_back(idx);
    if (!why.empty()) why += "; ";
    why += "event " + std::to_string(idx) + ": " + what;
  };
  if (events.empty()) throw ProgramError("empty program", {});
  if (!std::holds_alternative<LaserPulse>(events.front()))
    complain(0, "program must begin with a laser pulse");
  int readouts = 0;
  for (size_t i = 0; i < events.size(); ++i) {
    std::visit(
        [&](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, Readout>) {
            ++readouts;
            if (readouts > 1) complain(static_cast<int>(i), "extra readout");
            if (!(e.duration_us > 0.0))
              complain(static_cast<int>(i), "non-positive duration");
          } else if constexpr (!std::is_same_v<T, IdealPulse>) {
            if (!(e.duration_us > 0.0))
              complain(static_cast<int>(i), "non-positive duration");
          }
        },
        events[i]);
  }
  if (readouts == 0) {
    bad.push_back(static_cast<int>(events.size()) - 1);
    why += why.empty() ? "missing readout" : "; missing readout";
  }
  if (!bad.empty()) throw ProgramError("invalid program: " + why, bad);
}

EnsembleSpec EnsembleSpec::delta(int members, std::uint64_t seed) {
  return {members, Detuning::Delta, 0.0, seed};
}

EnsembleSpec EnsembleSpec::lorentzian_from_t2star(double t2star_us,
                                                  int members,
                                                  std::uint64_t seed) {
  if (!(t2star_us > 0.0) || std::isinf(t2star_us))
    throw std::invalid_argument("t2star must be finite and > 0");
  return {members, Detuning::Lorentzian, 1.0 / (kTwoPi * t2star_us), seed};
}

double member_detuning(const EnsembleSpec& ens, int index) {
  if (ens.members <= 0) throw std::invalid_argument("ensemble needs members");
  if (index < 0 || index >= ens.members)
    throw std::invalid_argument("member index out of range");
  if (ens.distribution == Detuning::Delta) return 0.0;
  if (!(ens.width_mhz > 0.0))
    throw std::invalid_argument("distribution width must be > 0");
  const double lo = kQuantileTail, hi = 1.0 - kQuantileTail;
  const double q = lo + (hi - lo) * (index + 0.5) / ens.members;
  if (ens.distribution == Detuning::Lorentzian)
    return ens.width_mhz * std::tan(std::numbers::pi * (q - 0.5));
  return ens.width_mhz * normal_quantile(q);
}

BlochState apply_rf(const BlochState& s, const RfPulse& pulse,
                    const DecoherenceParams& relax) {
  validate(relax);
  if (!(pulse.duration_us >= 0.0))
    throw std::invalid_argument("pulse duration must be >= 0");
  return apply(rf_propagator(pulse, relax), s);
}

BlochState apply_ideal(const BlochState& s, const IdealPulse& pulse) {
  const Eigen::Vector3d n(std::cos(pulse.phase_rad), std::sin(pulse.phase_rad),
                          0.0);
  const Eigen::Vector3d r(s.u, s.v, s.w);
  const double c = std::cos(pulse.angle_rad), sn = std::sin(pulse.angle_rad);
  const Eigen::Vector3d out =
      r * c + n.cross(r) * sn + n * n.dot(r) * (1.0 - c);
  return {out(0), out(1), out(2)};
}

BlochState free_evolution(const BlochState& s, double duration_us,
                          double detuning_mhz, const DecoherenceParams& relax) {
  validate(relax);
  if (!(duration_us >= 0.0))
    throw std::invalid_argument("duration must be >= 0");
  const double theta = kTwoPi * detuning_mhz * duration_us;
  const double d2 =
      std::isinf(relax.t2_us) ? 1.0 : std::exp(-duration_us / relax.t2_us);
  const double d1 =
      std::isinf(relax.t1_us) ? 1.0 : std::exp(-duration_us / relax.t1_us);
  const double c = std::cos(theta), sn = std::sin(theta);
  BlochState out;
  out.u = d2 * (s.u * c - s.v * sn);
  out.v = d2 * (s.v * c + s.u * sn);
  out.w = relax.w_equilibrium + (s.w - relax.w_equilibrium) * d1;
  return out;
}

RunResult run_program(const PulseProgram& prog, const DecoherenceParams& relax,
                      const EnsembleSpec& ens, const PumpLink& pump) {
  validate(relax);
  validate_program(prog.events);
  if (!prog.reference.empty()) validate_program(prog.reference);
  if (!(pump.time_constant_us > 0.0))
    throw std::invalid_argument("pump time constant must be > 0");
  std::vector<double> signals(ens.members);
  parallel_for(ens.members, [&](int i) {
    const double delta = member_detuning(ens, i);
    SingleRun main_run(relax, pump, delta, ens.rng_seed, i, 0);
    double sig = main_run.run(prog.events);
    if (!prog.reference.empty()) {
      SingleRun ref_run(relax, pump, delta, ens.rng_seed, i, 1);
      sig -= ref_run.run(prog.reference);
    }
    signals[i] = sig;
  });
  double mean = 0.0;
  for (double s : signals) mean += s;
  mean /= ens.members;
  double var = 0.0;
  for (double s : signals) var += (s - mean) * (s - mean);
  const double se = ens.members > 1
                        ? std::sqrt(var / (ens.members - 1.0) / ens.members)
                        : 0.0;
  return {mean, se};
}

void write_curve_csv(const Curve& c, std::ostream& out) {
  write_table_csv(out, {"x_value", "signal", "stderr_over_members"},
                  {&c.x, &c.y, &c.yerr});
}

Curve rabi_experiment(const std::vector<double>& tau_us, double rabi_mhz,
                      const DecoherenceParams& relax, const EnsembleSpec& ens,
                      const PumpLink& pump) {
  if (rabi_mhz < 0.0) throw std::invalid_argument("rabi must be >= 0");
  Curve c;
  for (double tau : tau_us) {
    if (tau < 0.0) throw std::invalid_argument("tau must be >= 0");
    PulseProgram p;
    p.events.push_back(LaserPulse{kInitLaserUs});
    if (tau > 0.0) p.events.push_back(RfPulse{tau, 0.0, rabi_mhz, 0.0});
    p.events.push_back(Readout{kReadoutUs});
    p.reference.push_back(LaserPulse{kInitLaserUs});
    if (tau > 0.0) p.reference.push_back(Wait{tau});
    p.reference.push_back(Readout{kReadoutUs});
    const RunResult r = run_program(p, relax, ens, pump);
    c.x.push_back(tau);
    c.y.push_back(r.signal);
    c.yerr.push_back(r.stderr_members);
  }
  normalize_curve(c, max_abs(c.y));
  return c;
}

Curve t1_experiment(const std::vector<double>& tau1_us,
                    const DecoherenceParams& relax, const PumpLink& pump,
                    const ExperimentPulses& pulses) {
  Curve c;
  for (double tau : tau1_us) {
    if (tau < 0.0) throw std::invalid_argument("tau1 must be >= 0");
    PulseProgram p;
    p.events.push_back(LaserPulse{kInitLaserUs});
    if (tau > 0.0) p.events.push_back(Wait{tau});
    p.events.push_back(Readout{kReadoutUs});
    p.reference.push_back(LaserPulse{kInitLaserUs});
    p.reference.push_back(pi_pulse(pulses, 0.0));
    if (tau > 0.0) p.reference.push_back(Wait{tau});
    p.reference.push_back(Readout{kReadoutUs});
    const RunResult r = run_program(p, relax, EnsembleSpec::delta(), pump);
    c.x.push_back(tau);
    c.y.push_back(r.signal);
    c.yerr.push_back(r.stderr_members);
  }
  if (!c.y.empty()) normalize_curve(c, c.y.front());
  return c;
}

Curve ramsey_experiment(const std::vector<double>& tauf_us, double nu_det_mhz,
                        const DecoherenceParams& relax,
                        const EnsembleSpec& ens, const PumpLink& pump,
                        const ExperimentPulses& pulses) {
  Curve c;
  for (double tau : tauf_us) {
    if (tau < 0.0) throw std::invalid_argument("tau_f must be >= 0");
    const double phi_d = kTwoPi * nu_det_mhz * tau;
    PulseProgram p;
    p.events.push_back(LaserPulse{kInitLaserUs});
    p.events.push_back(half_pi_pulse(pulses, 0.0));
    if (tau > 0.0) p.events.push_back(Wait{tau});
    p.events.push_back(half_pi_pulse(pulses, phi_d));
    p.events.push_back(Readout{kReadoutUs});
    p.reference.push_back(LaserPulse{kInitLaserUs});
    p.reference.push_back(half_pi_pulse(pulses, 0.0));
    if (tau > 0.0) p.reference.push_back(Wait{tau});
    p.reference.push_back(half_pi_pulse(pulses, std::numbers::pi + phi_d));
    p.reference.push_back(Readout{kReadoutUs});
    const RunResult r = run_program(p, relax, ens, pump);
    c.x.push_back(tau);
    c.y.push_back(r.signal);
    c.yerr.push_back(r.stderr_members);
  }
  normalize_curve(c, max_abs(c.y));
  return c;
}

Curve hahn_echo_experiment(const std::vector<double>& tau2_us,
                           const DecoherenceParams& relax,
                           const EnsembleSpec& ens, const PumpLink& pump,
                           const ExperimentPulses& pulses) {
  Curve c;
  for (double tau : tau2_us) {
    if (tau < 0.0) throw std::invalid_argument("tau2 must be >= 0");
    PulseProgram p;
    for (double last_phase : {0.0, std::numbers::pi}) {
      std::vector<Event>& ev =
          last_phase == 0.0 ? p.events : p.reference;
      ev.push_back(LaserPulse{kInitLaserUs});
      ev.push_back(half_pi_pulse(pulses, 0.0));
      if (tau > 0.0) ev.push_back(Wait{0.5 * tau});
      ev.push_back(pi_pulse(pulses, 0.0));
      if (tau > 0.0) ev.push_back(Wait{0.5 * tau});
      ev.push_back(half_pi_pulse(pulses, last_phase));
      ev.push_back(Readout{kReadoutUs});
    }
    const RunResult r = run_program(p, relax, ens, pump);
    c.x.push_back(tau);
    c.y.push_back(r.signal);
    c.yerr.push_back(r.stderr_members);
  }
  if (!c.y.empty()) normalize_curve(c, c.y.front());
  return c;
}

Curve cpmg_experiment(double tau_spacing_us, const std::vector<int>& n_pulses,
                      const DecoherenceParams& relax, const EnsembleSpec& ens,
                      const PumpLink& pump, const ExperimentPulses& pulses) {
  if (!(tau_spacing_us > 0.0))
    throw std::invalid_argument("pulse spacing must be > 0");
  Curve c;
  for (int n : n_pulses) {
    if (n < 1) throw std::invalid_argument("need at least one pulse");
    PulseProgram p;
    for (double last_phase : {0.0, std::numbers::pi}) {
      std::vector<Event>& ev =
          last_phase == 0.0 ? p.events : p.reference;
      ev.push_back(LaserPulse{kInitLaserUs});
      ev.push_back(half_pi_pulse(pulses, 0.0));
      for (int k = 0; k < n; ++k) {
        ev.push_back(Wait{0.5 * tau_spacing_us});
        // refocusing about y so every echo lands on the same pole
        ev.push_back(pi_pulse(pulses, 0.5 * std::numbers::pi));
        ev.push_back(Wait{0.5 * tau_spacing_us});
      }
      ev.push_back(half_pi_pulse(pulses, last_phase));
      ev.push_back(Readout{kReadoutUs});
    }
    const RunResult r = run_program(p, relax, ens, pump);
    c.x.push_back(n * (tau_spacing_us + pulses.pi_duration_us));
    c.y.push_back(r.signal);
    c.yerr.push_back(r.stderr_members);
  }
  if (!c.y.empty()) normalize_curve(c, c.y.front());
  return c;
}

}  // namespace siv
