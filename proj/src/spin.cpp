#include "siv/spin.hpp"

#include <cmath>
#include <stdexcept>

namespace siv {

namespace {

constexpr double kMaxFieldMt = 500.0;  // model-validity bound

bool half_integer(double s) {
  const double two_s = 2.0 * s;
  return s > 0.0 && std::abs(two_s - std::round(two_s)) < 1e-9;
}

}  // namespace

SpinSystem SpinSystem::v1v3() {
  return {Center::V1V3, 1.5, -28.0, 2.0, 865.0};
}

SpinSystem SpinSystem::v2() {
  return {Center::V2, 1.5, 128.0, 2.0, 887.0};
}

double FieldVector::norm_mt() const {
  return std::sqrt(bx_mt * bx_mt + by_mt * by_mt + bz_mt * bz_mt);
}

SpinOperators spin_operators(double spin) {
  if (!half_integer(spin))
    throw std::invalid_argument("spin must be a positive (half-)integer");
  const int dim = static_cast<int>(std::lround(2.0 * spin)) + 1;
  SpinOperators ops;
  ops.sz = Eigen::MatrixXcd::Zero(dim, dim);
  Eigen::MatrixXcd sp = Eigen::MatrixXcd::Zero(dim, dim);  // raising S+
  for (int i = 0; i < dim; ++i) {
    const double m = spin - i;
    ops.sz(i, i) = m;
    if (i > 0)  // <m+1|S+|m> with m = spin - i
      sp(i - 1, i) = std::sqrt(spin * (spin + 1.0) - m * (m + 1.0));
  }
  const Eigen::MatrixXcd sm = sp.adjoint();
  ops.sx = 0.5 * (sp + sm);
  ops.sy = std::complex<double>(0.0, -0.5) * (sp - sm);
  return ops;
}

Eigen::Matrix4cd hamiltonian(const SpinSystem& sys, const FieldVector& b) {
  if (std::abs(sys.spin - 1.5) > 1e-12)
    throw std::invalid_argument("hamiltonian expects spin 3/2");
  if (!std::isfinite(b.norm_mt()) || b.norm_mt() > kMaxFieldMt)
    throw std::domain_error("field magnitude outside model validity (500 mT)");
  const SpinOperators ops = spin_operators(sys.spin);
  const double d = 0.5 * sys.two_d_mhz;
  const double g = sys.gamma_mhz_per_mt();
  Eigen::MatrixXcd h =
      d * (ops.sz * ops.sz - 1.25 * Eigen::MatrixXcd::Identity(4, 4)) +
      g * (b.bx_mt * ops.sx + b.by_mt * ops.sy + b.bz_mt * ops.sz);
  return Eigen::Matrix4cd(h);
}

EigenSystem eigenlevels(const Eigen::Matrix4cd& h) {
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw std::domain_error("eigenlevels: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(h);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigenlevels: diagonalization failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

std::vector<Transition> transition_table(const SpinSystem& sys,
                                         const FieldVector& b,
                                         double min_strength,
                                         DriveAxis drive) {
  if (min_strength < 0.0)
    throw std::invalid_argument("min_strength must be >= 0");
  const EigenSystem es = eigenlevels(hamiltonian(sys, b));
  const SpinOperators ops = spin_operators(sys.spin);
  const Eigen::MatrixXcd& s_drive = drive == DriveAxis::X   ? ops.sx
                                    : drive == DriveAxis::Y ? ops.sy
                                                            : ops.sz;
  std::vector<Transition> lines;
  for (int l = 0; l < 4; ++l) {
    for (int u = l + 1; u < 4; ++u) {
      const double f = es.energies_mhz(u) - es.energies_mhz(l);
      if (f <= kMergeTolMhz) continue;  // intra-doublet element, not a line
      const std::complex<double> amp =
          (es.states.col(u).adjoint() * s_drive * es.states.col(l))(0, 0);
      const double strength = std::norm(amp);
      if (strength <= min_strength) continue;
      lines.push_back({l, u, f, strength});
    }
  }
  std::sort(lines.begin(), lines.end(),
            [](const Transition& a, const Transition& b2) {
              return a.frequency_mhz < b2.frequency_mhz;
            });
  std::vector<Transition> merged;
  for (const Transition& t : lines) {
    if (!merged.empty() &&
        t.frequency_mhz - merged.back().frequency_mhz < kMergeTolMhz) {
      merged.back().strength += t.strength;
    } else {
      merged.push_back(t);
    }
  }
  return merged;
}

}  // namespace siv
