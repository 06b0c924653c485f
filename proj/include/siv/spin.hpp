#pragma once

#include <Eigen/Dense>
#include <vector>

namespace siv {

// Bohr magneton over Planck constant, MHz per mT (per unit g-factor).
inline constexpr double kBohrMhzPerMt = 13.996245;

// Degenerate transitions closer than this are reported as one line.
inline constexpr double kMergeTolMhz = 1e-6;

enum class Center { V1V3, V2 };

// Spin-3/2 silicon-vacancy ground state. two_d_mhz stores the full
// zero-field splitting 2D (the quantity quoted for these centers), so the
// Hamiltonian uses two_d_mhz / 2.
struct SpinSystem {
  Center label = Center::V2;
  double spin = 1.5;
  double two_d_mhz = 128.0;
  double g_factor = 2.0;
  double zpl_nm = 887.0;

  double gamma_mhz_per_mt() const { return g_factor * kBohrMhzPerMt; }

  static SpinSystem v1v3();
  static SpinSystem v2();
};

struct FieldVector {
  double bx_mt = 0.0;
  double by_mt = 0.0;
  double bz_mt = 0.0;

  double norm_mt() const;
};

struct SpinOperators {
  Eigen::MatrixXcd sx, sy, sz;
};

// Angular-momentum matrices in the |s,m> basis ordered m = s..-s.
// spin must be a positive integer or half-integer.
SpinOperators spin_operators(double spin);

Eigen::Matrix4cd hamiltonian(const SpinSystem& sys, const FieldVector& b);

struct EigenSystem {
  Eigen::Vector4d energies_mhz;  // ascending
  Eigen::Matrix4cd states;       // columns match energies
};

// Diagonalizes a Hermitian 4x4; rejects matrices that are not Hermitian
// within 1e-9 relative.
EigenSystem eigenlevels(const Eigen::Matrix4cd& h);

struct Transition {
  int lower = 0;
  int upper = 0;
  double frequency_mhz = 0.0;
  double strength = 0.0;  // |<u|S_drive|l>|^2
};

enum class DriveAxis { X, Y, Z };

// Allowed RF transitions sorted by ascending frequency. Lines weaker than
// min_strength and zero-frequency intra-doublet elements are dropped;
// degenerate lines are merged (strengths summed).
std::vector<Transition> transition_table(const SpinSystem& sys,
                                         const FieldVector& b,
                                         double min_strength = 1e-4,
                                         DriveAxis drive = DriveAxis::X);

}  // namespace siv
