#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "siv/spin.hpp"
#include "support.hpp"

using namespace siv;
using Eigen::Matrix4cd;
using Eigen::MatrixXcd;

namespace {
const std::complex<double> kI(0.0, 1.0);
}

TEST_CASE("spin operators satisfy angular momentum algebra") {
  for (double s : {0.5, 1.0, 1.5, 2.5}) {
    const SpinOperators ops = spin_operators(s);
    const int dim = static_cast<int>(ops.sx.rows());
    CHECK(dim == static_cast<int>(2 * s + 1));
    const MatrixXcd comm = ops.sx * ops.sy - ops.sy * ops.sx;
    CHECK((comm - kI * ops.sz).cwiseAbs().maxCoeff() < 1e-12);
    const MatrixXcd casimir =
        ops.sx * ops.sx + ops.sy * ops.sy + ops.sz * ops.sz;
    const MatrixXcd expect =
        s * (s + 1.0) * MatrixXcd::Identity(dim, dim);
    CHECK((casimir - expect).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((ops.sx - ops.sx.adjoint()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((ops.sy - ops.sy.adjoint()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(std::abs(ops.sz.trace()) < 1e-12);
  }
  CHECK_THROWS_AS(spin_operators(0.7), std::invalid_argument);
  CHECK_THROWS_AS(spin_operators(-1.5), std::invalid_argument);
}

TEST_CASE("hamiltonian is Hermitian and traceless for random fields") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> fld(-9.0, 9.0);
  for (int k = 0; k < 200; ++k) {
    const SpinSystem sys = (k % 2) ? SpinSystem::v2() : SpinSystem::v1v3();
    const FieldVector b{fld(rng), fld(rng), fld(rng)};
    const Matrix4cd h = hamiltonian(sys, b);
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(h.trace()) < 1e-9);
  }
  CHECK_THROWS_AS(hamiltonian(SpinSystem::v2(), FieldVector{600.0, 0, 0}),
                  std::domain_error);
}

TEST_CASE("zero-field eigenvalues sit at +-two_d/2") {
  const EigenSystem v2 = eigenlevels(hamiltonian(SpinSystem::v2(), {}));
  CHECK(v2.energies_mhz(0) == doctest::Approx(-64.0).epsilon(1e-12));
  CHECK(v2.energies_mhz(1) == doctest::Approx(-64.0).epsilon(1e-12));
  CHECK(v2.energies_mhz(2) == doctest::Approx(64.0).epsilon(1e-12));
  CHECK(v2.energies_mhz(3) == doctest::Approx(64.0).epsilon(1e-12));

  // two_d < 0 puts the m=+-3/2 doublet lowest
  const EigenSystem v13 = eigenlevels(hamiltonian(SpinSystem::v1v3(), {}));
  CHECK(v13.energies_mhz(0) == doctest::Approx(-14.0).epsilon(1e-12));
  CHECK(v13.energies_mhz(3) == doctest::Approx(14.0).epsilon(1e-12));
  const SpinOperators ops = spin_operators(1.5);
  for (int i : {0, 1}) {
    const double sz2 = (v13.states.col(i).adjoint() * ops.sz * ops.sz *
                        v13.states.col(i))(0, 0).real();
    CHECK(sz2 == doctest::Approx(2.25).epsilon(1e-9));
  }
}

TEST_CASE("axial-field levels match the analytic formula") {
  const SpinSystem sys = SpinSystem::v2();
  const EigenSystem es = eigenlevels(hamiltonian(sys, {0, 0, 1.0}));
  // E(m) = (two_d/2)(m^2 - 5/4) + gamma bz m, gamma = 27.992490 MHz/mT
  CHECK(es.energies_mhz(0) == doctest::Approx(-77.996245).epsilon(1e-12));
  CHECK(es.energies_mhz(1) == doctest::Approx(-50.003755).epsilon(1e-12));
  CHECK(es.energies_mhz(2) == doctest::Approx(22.011265).epsilon(1e-12));
  CHECK(es.energies_mhz(3) == doctest::Approx(105.988735).epsilon(1e-12));

  std::mt19937 rng(23);
  std::uniform_real_distribution<double> dsplit(-200.0, 200.0);
  std::uniform_real_distribution<double> fld(-9.0, 9.0);
  for (int k = 0; k < 500; ++k) {
    SpinSystem s = sys;
    s.two_d_mhz = dsplit(rng);
    const double bz = fld(rng);
    const EigenSystem num = eigenlevels(hamiltonian(s, {0, 0, bz}));
    std::vector<double> ana;
    for (double m : {1.5, 0.5, -0.5, -1.5})
      ana.push_back(oracle::level_bparallel_mhz(s.two_d_mhz,
                                                s.gamma_mhz_per_mt(), bz, m));
    std::sort(ana.begin(), ana.end());
    for (int i = 0; i < 4; ++i) {
      const double scale = std::max(1.0, std::abs(ana[i]));
      CHECK(std::abs(num.energies_mhz(i) - ana[i]) / scale < 1e-10);
    }
  }
}

TEST_CASE("transverse-field eigenvalues agree with the Jacobi oracle") {
  std::mt19937 rng(37);
  std::uniform_real_distribution<double> fld(-5.0, 5.0);
  for (int k = 0; k < 100; ++k) {
    const SpinSystem sys = (k % 2) ? SpinSystem::v2() : SpinSystem::v1v3();
    const FieldVector b{fld(rng), fld(rng), fld(rng)};
    const Matrix4cd h = hamiltonian(sys, b);
    const EigenSystem es = eigenlevels(h);
    const std::vector<double> ref = oracle::jacobi_eigenvalues(h);
    for (int i = 0; i < 4; ++i)
      CHECK(es.energies_mhz(i) ==
            doctest::Approx(ref[i]).epsilon(1e-10).scale(100.0));
  }
  // the worked example: V1V3 with 1 mT transverse field
  const Matrix4cd h = hamiltonian(SpinSystem::v1v3(), {1.0, 0, 0});
  const EigenSystem es = eigenlevels(h);
  const std::vector<double> ref = oracle::jacobi_eigenvalues(h);
  for (int i = 0; i < 4; ++i)
    CHECK(es.energies_mhz(i) == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("eigenvalues depend only on axial and transverse magnitude") {
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> fld(0.0, 6.0);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
  for (int k = 0; k < 100; ++k) {
    const SpinSystem sys = SpinSystem::v2();
    const double bperp = fld(rng), bz = fld(rng) - 3.0;
    const double a1 = ang(rng), a2 = ang(rng);
    const EigenSystem e1 = eigenlevels(hamiltonian(
        sys, {bperp * std::cos(a1), bperp * std::sin(a1), bz}));
    const EigenSystem e2 = eigenlevels(hamiltonian(
        sys, {bperp * std::cos(a2), bperp * std::sin(a2), bz}));
    for (int i = 0; i < 4; ++i)
      CHECK(e1.energies_mhz(i) ==
            doctest::Approx(e2.energies_mhz(i)).epsilon(1e-10).scale(10.0));
  }
}

TEST_CASE("eigenlevels rejects non-Hermitian input") {
  Matrix4cd h = hamiltonian(SpinSystem::v2(), {});
  h(0, 1) += std::complex<double>(0.1, 0.0);
  CHECK_THROWS_AS(eigenlevels(h), std::domain_error);
}

TEST_CASE("zero-field transition table collapses to the single resonance") {
  const auto v2 = transition_table(SpinSystem::v2(), {});
  REQUIRE(v2.size() == 1);
  CHECK(v2[0].frequency_mhz == doctest::Approx(128.0).epsilon(1e-12));
  CHECK(v2[0].strength == doctest::Approx(1.5).epsilon(1e-12));

  const auto v13 = transition_table(SpinSystem::v1v3(), {});
  REQUIRE(v13.size() == 1);
  CHECK(v13[0].frequency_mhz == doctest::Approx(28.0).epsilon(1e-12));
  CHECK(v13[0].strength == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("axial-field transition table reproduces the three branches") {
  const auto t = transition_table(SpinSystem::v2(), {0, 0, 1.0});
  REQUIRE(t.size() == 3);
  CHECK(t[0].frequency_mhz == doctest::Approx(27.992490).epsilon(1e-12));
  CHECK(t[0].strength == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(t[1].frequency_mhz == doctest::Approx(100.007510).epsilon(1e-12));
  CHECK(t[1].strength == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(t[2].frequency_mhz == doctest::Approx(155.992490).epsilon(1e-12));
  CHECK(t[2].strength == doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("transition table is sorted, non-negative and threshold-filtered") {
  std::mt19937 rng(53);
  std::uniform_real_distribution<double> fld(-6.0, 6.0);
  for (int k = 0; k < 200; ++k) {
    const SpinSystem sys = (k % 2) ? SpinSystem::v2() : SpinSystem::v1v3();
    const FieldVector b{fld(rng), fld(rng), fld(rng)};
    const double thresh = (k % 3) ? 1e-4 : 0.05;
    const auto t = transition_table(sys, b, thresh);
    for (size_t i = 0; i < t.size(); ++i) {
      CHECK(t[i].frequency_mhz > 0.0);
      CHECK(t[i].strength > thresh);
      if (i > 0) CHECK(t[i].frequency_mhz >= t[i - 1].frequency_mhz);
    }
  }
  CHECK_THROWS_AS(transition_table(SpinSystem::v2(), {}, -1.0),
                  std::invalid_argument);
}

TEST_CASE("signed axial branches move linearly with bz") {
  // nu1 grows at +gamma, nu2 shrinks at -gamma, central grows at +gamma
  const SpinSystem sys = SpinSystem::v2();
  const double g = sys.gamma_mhz_per_mt();
  double prev1 = 0, prev2 = 0, prevc = 0;
  bool first = true;
  for (double bz = 0.0; bz <= 4.0; bz += 0.25) {
    const EigenSystem es = eigenlevels(hamiltonian(sys, {0, 0, bz}));
    // for B||c the ascending order at moderate field is m=-1/2,+1/2,-3/2,+3/2
    const double nu1 = 128.0 + g * bz;
    const double nu2 = 128.0 - g * bz;
    const double cen = g * bz;
    if (!first) {
      CHECK(nu1 > prev1);
      CHECK(nu2 < prev2);
      CHECK(cen > prevc);
    }
    // cross-check the analytic branch values against the numeric table
    const auto t = transition_table(sys, {0, 0, bz}, 1e-4);
    for (const auto& line : t) {
      const double d1 = std::abs(line.frequency_mhz - nu1);
      const double d2 = std::abs(line.frequency_mhz - nu2);
      const double dc = std::abs(line.frequency_mhz - cen);
      CHECK(std::min({d1, d2, dc}) < 1e-9);
    }
    prev1 = nu1;
    prev2 = nu2;
    prevc = cen;
    first = false;
  }
}
