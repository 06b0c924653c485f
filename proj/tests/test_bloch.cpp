#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "siv/bloch.hpp"
#include "siv/presets.hpp"
#include "support.hpp"

using namespace siv;

namespace {

constexpr double kPi = std::numbers::pi;

DecoherenceParams no_relax() { return {}; }

double norm3(const BlochState& s) { return s.norm(); }

}  // namespace

TEST_CASE("on-resonance pi pulse inverts the population") {
  const BlochState s{0.0, 0.0, 1.0};
  // 2 pi * rabi * dur = pi  =>  dur = 1 / (2 rabi)
  const RfPulse pulse{0.025, 0.0, 20.0, 0.0};
  const BlochState out = apply_rf(s, pulse, no_relax());
  CHECK(out.w == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(std::abs(out.u) < 1e-9);
  CHECK(std::abs(out.v) < 1e-9);
}

TEST_CASE("zero-amplitude pulse reduces to free evolution") {
  DecoherenceParams relax;
  relax.t1_us = 40.0;
  relax.t2_us = 7.0;
  relax.w_equilibrium = 0.3;
  const BlochState s{0.4, -0.2, 0.6};
  for (double det : {0.0, -3.7, 11.0}) {
    const BlochState a = apply_rf(s, {1.3, 0.9, 0.0, det}, relax);
    const BlochState b = free_evolution(s, 1.3, det, relax);
    CHECK(a.u == doctest::Approx(b.u).epsilon(1e-12));
    CHECK(a.v == doctest::Approx(b.v).epsilon(1e-12));
    CHECK(a.w == doctest::Approx(b.w).epsilon(1e-12));
  }
}

TEST_CASE("driven evolution matches an RK4 oracle") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int k = 0; k < 25; ++k) {
    DecoherenceParams relax;
    relax.t1_us = 5.0 + 60.0 * u01(rng);
    relax.t2_us = std::min(2.0 * relax.t1_us, 0.5 + 8.0 * u01(rng));
    relax.w_equilibrium = (k % 3 == 0) ? 0.4 * u01(rng) : 0.0;
    const RfPulse pulse{0.02 + 0.4 * u01(rng), 2.0 * kPi * u01(rng),
                        25.0 * u01(rng), 18.0 * (u01(rng) - 0.5)};
    const BlochState s{0.5 * (u01(rng) - 0.5), 0.5 * (u01(rng) - 0.5),
                       u01(rng) - 0.5};
    const double wx = 2.0 * kPi * pulse.rabi_mhz * std::cos(pulse.phase_rad);
    const double wy = 2.0 * kPi * pulse.rabi_mhz * std::sin(pulse.phase_rad);
    const double wz = 2.0 * kPi * pulse.detuning_mhz;
    const double g1 = 1.0 / relax.t1_us, g2 = 1.0 / relax.t2_us;
    const double weq = relax.w_equilibrium;
    Eigen::VectorXd y(3);
    y << s.u, s.v, s.w;
    const Eigen::VectorXd ref = oracle::rk4(
        [&](double, const Eigen::VectorXd& r) -> Eigen::VectorXd {
          Eigen::VectorXd d(3);
          d(0) = -g2 * r(0) - wz * r(1) + wy * r(2);
          d(1) = wz * r(0) - g2 * r(1) - wx * r(2);
          d(2) = -wy * r(0) + wx * r(1) - g1 * (r(2) - weq);
          return d;
        },
        y, 0.0, pulse.duration_us, 40000);
    const BlochState out = apply_rf(s, pulse, relax);
    CHECK(std::abs(out.u - ref(0)) < 1e-9);
    CHECK(std::abs(out.v - ref(1)) < 1e-9);
    CHECK(std::abs(out.w - ref(2)) < 1e-9);
  }
}

TEST_CASE("detuned drive follows the generalized Rabi formula") {
  const double rabi = 6.0, det = 4.5;
  const double gen = std::hypot(rabi, det);
  const BlochState s{0.0, 0.0, 1.0};
  for (double t : {0.01, 0.07, 0.19, 0.44}) {
    const BlochState out = apply_rf(s, {t, 0.0, rabi, det}, no_relax());
    const double expect =
        1.0 - 2.0 * (rabi * rabi) / (gen * gen) *
                  std::pow(std::sin(kPi * gen * t), 2);
    CHECK(out.w == doctest::Approx(expect).epsilon(1e-9));
    CHECK(norm3(out) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("pulse composition is a semigroup") {
  DecoherenceParams relax;
  relax.t1_us = 33.0;
  relax.t2_us = 4.2;
  relax.w_equilibrium = 0.17;
  const RfPulse whole{0.9, 1.1, 9.0, -6.0};
  RfPulse first = whole, second = whole;
  first.duration_us = 0.53;
  second.duration_us = 0.37;
  const BlochState s{0.25, -0.4, 0.55};
  const BlochState direct = apply_rf(s, whole, relax);
  const BlochState chained = apply_rf(apply_rf(s, first, relax), second, relax);
  CHECK(direct.u == doctest::Approx(chained.u).epsilon(1e-9));
  CHECK(direct.v == doctest::Approx(chained.v).epsilon(1e-9));
  CHECK(direct.w == doctest::Approx(chained.w).epsilon(1e-9));
}

TEST_CASE("norm is preserved without relaxation and contracts with it") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  BlochState s{0.0, 0.0, 1.0};
  for (int k = 0; k < 60; ++k) {
    const RfPulse p{0.3 * u01(rng), 2 * kPi * u01(rng), 15.0 * u01(rng),
                    10.0 * (u01(rng) - 0.5)};
    s = apply_rf(s, p, no_relax());
    s = free_evolution(s, 0.2 * u01(rng), 5.0 * (u01(rng) - 0.5), no_relax());
    CHECK(norm3(s) == doctest::Approx(1.0).epsilon(1e-12));
  }
  DecoherenceParams relax;
  relax.t1_us = 20.0;
  relax.t2_us = 6.0;
  s = {0.0, 0.0, 1.0};
  double prev = 1.0;
  for (int k = 0; k < 60; ++k) {
    const RfPulse p{0.3 * u01(rng), 2 * kPi * u01(rng), 15.0 * u01(rng),
                    10.0 * (u01(rng) - 0.5)};
    s = apply_rf(s, p, relax);
    const double n = norm3(s);
    CHECK(n <= 1.0 + 1e-9);
    CHECK(n <= prev + 1e-12);
    prev = n;
  }
}

TEST_CASE("free evolution identities") {
  DecoherenceParams relax;
  relax.t1_us = 50.0;
  relax.t2_us = 8.0;
  relax.w_equilibrium = -0.1;
  const BlochState s{0.3, 0.4, 0.5};
  const BlochState id = free_evolution(s, 0.0, 123.0, relax);
  CHECK(id.u == s.u);
  CHECK(id.v == s.v);
  CHECK(id.w == s.w);
  // 40 MHz for 25 ns is one full turn
  const BlochState turn = free_evolution(s, 0.025, 40.0, no_relax());
  CHECK(turn.u == doctest::Approx(s.u).epsilon(1e-12));
  CHECK(turn.v == doctest::Approx(s.v).epsilon(1e-12));
  const BlochState damp = free_evolution(s, 2.0, 0.0, relax);
  CHECK(damp.u == doctest::Approx(s.u * std::exp(-0.25)).epsilon(1e-12));
  CHECK(damp.w == doctest::Approx(-0.1 + 0.6 * std::exp(-0.04)).epsilon(1e-12));
}

TEST_CASE("ideal pulses rotate exactly") {
  const BlochState s{0.0, 0.0, 1.0};
  const BlochState flip = apply_ideal(s, {kPi, 0.7});
  CHECK(flip.w == doctest::Approx(-1.0).epsilon(1e-15));
  const BlochState half = apply_ideal(s, {0.5 * kPi, 0.0});
  CHECK(half.v == doctest::Approx(-1.0).epsilon(1e-15));
  const BlochState back = apply_ideal(half, {0.5 * kPi, 0.0});
  CHECK(back.w == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("flipping the detection phase negates the coherent part") {
  std::mt19937 rng(29);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    BlochState s{u01(rng) - 0.5, u01(rng) - 0.5, u01(rng) - 0.5};
    const double theta = 2.0 * kPi * u01(rng);
    const double phi = 2.0 * kPi * u01(rng);
    const BlochState a = apply_ideal(s, {theta, phi});
    const BlochState b = apply_ideal(s, {theta, phi + kPi});
    // sum keeps only the w cos(theta) part, difference only the coherences
    CHECK(a.w + b.w == doctest::Approx(2.0 * s.w * std::cos(theta))
                           .epsilon(1e-12));
  }
}

TEST_CASE("program validation names the offending events") {
  std::vector<Event> ok{LaserPulse{1.0}, RfPulse{0.1, 0.0, 10.0, 0.0},
                        Readout{4.0}};
  CHECK_NOTHROW(validate_program(ok));

  std::vector<Event> bad{Wait{1.0}, RfPulse{-0.1, 0.0, 10.0, 0.0},
                         Readout{4.0}, Readout{4.0}};
  try {
    validate_program(bad);
    FAIL("expected ProgramError");
  } catch (const ProgramError& e) {
    const auto& idx = e.event_indices();
    REQUIRE(idx.size() == 3);
    CHECK(idx[0] == 0);  // does not start with laser
    CHECK(idx[1] == 1);  // negative duration
    CHECK(idx[2] == 3);  // duplicate readout
  }
  std::vector<Event> noread{LaserPulse{1.0}, Wait{1.0}};
  CHECK_THROWS_AS(validate_program(noread), ProgramError);
  CHECK_THROWS_AS(validate_program({}), ProgramError);
}

TEST_CASE("relaxation parameter validation") {
  DecoherenceParams bad;
  bad.t1_us = 1.0;
  bad.t2_us = 2.5;  // exceeds 2 t1
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad.t2_us = -1.0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  DecoherenceParams star;
  star.t2_us = 1.0;
  star.t2star_us = 2.0;
  CHECK_THROWS_AS(validate(star), std::invalid_argument);
  DecoherenceParams noise;
  noise.noise = {0.5, 0.0};
  CHECK_THROWS_AS(validate(noise), std::invalid_argument);
}

TEST_CASE("stratified member detunings are symmetric and calibrated") {
  const EnsembleSpec lor{101, Detuning::Lorentzian, 2.0, 1};
  for (int i = 0; i < 50; ++i)
    CHECK(member_detuning(lor, i) ==
          doctest::Approx(-member_detuning(lor, 100 - i)).epsilon(1e-12));
  CHECK(member_detuning(lor, 50) == doctest::Approx(0.0).epsilon(1e-12));
  for (int i = 1; i < 101; ++i)
    CHECK(member_detuning(lor, i) > member_detuning(lor, i - 1));

  // Gaussian quantiles against the standard normal table
  const EnsembleSpec gau{10000, Detuning::Gaussian, 1.0, 1};
  const double lo = 1e-4, hi = 1.0 - 1e-4;
  auto index_for = [&](double q) {
    return static_cast<int>(std::lround((q - lo) / (hi - lo) * 10000 - 0.5));
  };
  CHECK(member_detuning(gau, index_for(0.975)) ==
        doctest::Approx(1.959964).epsilon(5e-4));
  CHECK(member_detuning(gau, index_for(0.8413447)) ==
        doctest::Approx(1.0).epsilon(5e-4));

  CHECK(member_detuning(EnsembleSpec::delta(5), 3) == 0.0);
  CHECK_THROWS_AS(member_detuning(lor, 101), std::invalid_argument);
  CHECK_THROWS_AS(member_detuning(lor, -1), std::invalid_argument);
  CHECK(EnsembleSpec::lorentzian_from_t2star(0.038, 7).width_mhz ==
        doctest::Approx(1.0 / (2.0 * kPi * 0.038)).epsilon(1e-12));
  CHECK_THROWS_AS(EnsembleSpec::lorentzian_from_t2star(0.0, 7),
                  std::invalid_argument);
}

TEST_CASE("identical main and reference programs cancel exactly") {
  PulseProgram p;
  p.events = {LaserPulse{300.0}, RfPulse{0.05, 0.3, 11.0, 2.0}, Wait{0.7},
              Readout{4.0}};
  p.reference = p.events;
  DecoherenceParams relax;
  relax.t1_us = 100.0;
  relax.t2_us = 5.0;
  const RunResult r =
      run_program(p, relax, EnsembleSpec::delta(16), {0.7, 11.0});
  CHECK(r.signal == 0.0);
}

TEST_CASE("laser pulse pumps with the configured time constant") {
  PulseProgram p;
  p.events = {LaserPulse{11.0}, Readout{4.0}};
  const PumpLink pump{0.19, 11.0};
  const RunResult r =
      run_program(p, no_relax(), EnsembleSpec::delta(1), pump);
  CHECK(r.signal ==
        doctest::Approx(0.19 * (1.0 - std::exp(-1.0))).epsilon(1e-12));
}

TEST_CASE("runs are deterministic and seed-sensitive") {
  DecoherenceParams relax;
  relax.t1_us = 80.0;
  relax.t2_us = kInf;
  relax.t2_us = 40.0;
  relax.noise = {0.4, 2.0};
  PulseProgram p;
  p.events = {LaserPulse{300.0}, IdealPulse{0.5 * kPi, 0.0}, Wait{3.0},
              IdealPulse{0.5 * kPi, 0.0}, Readout{4.0}};
  p.reference = p.events;
  p.reference[3] = IdealPulse{0.5 * kPi, kPi};
  const EnsembleSpec ens{40, Detuning::Lorentzian, 0.8, 99};
  const RunResult a = run_program(p, relax, ens, {0.8, 11.0});
  const RunResult b = run_program(p, relax, ens, {0.8, 11.0});
  CHECK(a.signal == b.signal);
  CHECK(a.stderr_members == b.stderr_members);
  EnsembleSpec other = ens;
  other.rng_seed = 100;
  const RunResult c = run_program(p, relax, other, {0.8, 11.0});
  CHECK(a.signal != c.signal);
}

TEST_CASE("rabi experiment oscillates at the programmed frequency") {
  const double rabi = 12.44;
  DecoherenceParams relax;  // fully coherent
  std::vector<double> taus;
  for (int i = 0; i <= 200; ++i) taus.push_back(i * 0.002);
  const Curve c =
      rabi_experiment(taus, rabi, relax, EnsembleSpec::delta(1), {0.2, 11.0});
  std::vector<double> expect;
  double peak = 0.0;
  for (double tau : taus) {
    expect.push_back(0.5 * (std::cos(2.0 * kPi * rabi * tau) - 1.0));
    peak = std::max(peak, std::abs(expect.back()));
  }
  for (size_t i = 0; i < taus.size(); ++i)
    CHECK(c.y[i] == doctest::Approx(expect[i] / peak).epsilon(1e-9));
  const Curve flat =
      rabi_experiment({0.0, 0.1, 0.2}, 0.0, relax, EnsembleSpec::delta(1),
                      {0.2, 11.0});
  for (double v : flat.y) CHECK(v == 0.0);
}

TEST_CASE("t1 experiment decays single-exponentially") {
  DecoherenceParams relax;
  relax.t1_us = 142.1;
  relax.t2_us = 3.73;
  std::vector<double> taus;
  for (int i = 0; i <= 12; ++i) taus.push_back(i * 50.0);
  const Curve c = t1_experiment(taus, relax, {0.19, 11.0}, {20.0, 0.0});
  for (size_t i = 0; i < taus.size(); ++i)
    CHECK(c.y[i] ==
          doctest::Approx(std::exp(-taus[i] / 142.1)).epsilon(1e-9));
}

TEST_CASE("ramsey fringes ride the closed-form Lorentzian envelope") {
  const double gamma = 1.0 / (2.0 * kPi * 0.038);  // t2star = 38 ns
  const EnsembleSpec ens{4001, Detuning::Lorentzian, gamma, 5};
  DecoherenceParams relax;  // inhomogeneous only
  const double nu = 40.0;
  std::vector<double> taus;
  for (int i = 0; i <= 30; ++i) taus.push_back(i * 0.004);
  const Curve c = ramsey_experiment(taus, nu, relax, ens, {0.5, 11.0},
                                    {20.0, 0.0});
  for (size_t i = 0; i < taus.size(); ++i) {
    const double expect = -std::cos(2.0 * kPi * nu * taus[i]) *
                          std::exp(-taus[i] / 0.038);
    CHECK(std::abs(c.y[i] - expect) < 4e-3);
  }
}

TEST_CASE("hahn echo refocuses every static distribution") {
  DecoherenceParams relax;  // no homogeneous decay
  const std::vector<double> taus{0.5, 1.0, 2.0, 4.0};
  const EnsembleSpec specs[] = {
      EnsembleSpec::delta(32, 7),
      {33, Detuning::Lorentzian, 3.0, 7},
      {33, Detuning::Gaussian, 2.0, 7},
  };
  std::vector<Curve> curves;
  for (const EnsembleSpec& ens : specs)
    curves.push_back(
        hahn_echo_experiment(taus, relax, ens, {0.6, 11.0}, {20.0, 0.0}));
  for (const Curve& c : curves)
    for (double v : c.y) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
  for (size_t i = 0; i < taus.size(); ++i) {
    CHECK(std::abs(curves[0].y[i] - curves[1].y[i]) < 1e-6);
    CHECK(std::abs(curves[0].y[i] - curves[2].y[i]) < 1e-6);
  }
}

TEST_CASE("single-pulse train equals the hahn echo curve") {
  DecoherenceParams relax;
  relax.t1_us = 200.0;
  relax.t2_us = 3.73;
  const EnsembleSpec ens{17, Detuning::Lorentzian, 1.5, 11};
  const double spacing = 1.2;
  const Curve train = cpmg_experiment(spacing, {1, 2, 3}, relax, ens,
                                      {0.6, 11.0}, {20.0, 0.0});
  const Curve echo = hahn_echo_experiment({spacing, 2 * spacing, 3 * spacing},
                                          relax, ens, {0.6, 11.0}, {20.0, 0.0});
  for (size_t i = 0; i < train.y.size(); ++i)
    CHECK(std::abs(train.y[i] - echo.y[i]) < 1e-6);
}

TEST_CASE("fast noise limit reproduces the motional-narrowed rate") {
  DecoherenceParams relax;
  relax.noise = {1.0, 0.02};  // sigma MHz, tau_c us
  const double rate = std::pow(2.0 * kPi * relax.noise.sigma_mhz, 2) *
                      relax.noise.tau_c_us;
  const EnsembleSpec ens = EnsembleSpec::delta(1500, 23);
  const std::vector<double> taus{0.0, 1.25};
  const Curve fid = ramsey_experiment(taus, 0.0, relax, ens, {0.5, 11.0},
                                      {20.0, 0.0});
  const Curve echo = hahn_echo_experiment(taus, relax, ens, {0.5, 11.0},
                                          {20.0, 0.0});
  const double fid_rate = -std::log(std::abs(fid.y[1])) / taus[1];
  const double echo_rate = -std::log(std::abs(echo.y[1])) / taus[1];
  CHECK(fid_rate == doctest::Approx(rate).epsilon(0.15));
  CHECK(echo_rate == doctest::Approx(rate).epsilon(0.15));
  CHECK(echo_rate == doctest::Approx(fid_rate).epsilon(0.10));
}

TEST_CASE("pulse trains outlive single echoes under slow noise") {
  DecoherenceParams relax;
  relax.noise = {0.03, 5.0};
  const EnsembleSpec ens = EnsembleSpec::delta(150, 31);
  const double spacing = 2.0;
  const Curve train = cpmg_experiment(spacing, {10}, relax, ens, {0.5, 11.0},
                                      {20.0, 0.0});
  const Curve echo = hahn_echo_experiment({10 * spacing}, relax, ens,
                                          {0.5, 11.0}, {20.0, 0.0});
  // both curves normalize to their first (only) point, so compare raw decay
  // via a two-point version instead
  const Curve train2 = cpmg_experiment(spacing, {1, 10}, relax, ens,
                                       {0.5, 11.0}, {20.0, 0.0});
  const Curve echo2 = hahn_echo_experiment({spacing, 10 * spacing}, relax, ens,
                                           {0.5, 11.0}, {20.0, 0.0});
  CHECK(train2.y[1] > echo2.y[1] + 0.05);
  (void)train;
  (void)echo;
}

TEST_CASE("curve csv emits the documented columns") {
  Curve c;
  c.x = {0.0, 1.0};
  c.y = {1.0, 0.5};
  c.yerr = {0.0, 0.01};
  std::ostringstream out;
  write_curve_csv(c, out);
  const std::string text = out.str();
  CHECK(text.rfind("x_value,signal,stderr_over_members\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
