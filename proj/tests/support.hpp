#pragma once

// Oracles for the test suite. These deliberately avoid the library's own
// code paths: the eigenvalue oracle is a hand-rolled complex Jacobi sweep,
// the ODE oracle a plain fixed-step RK4.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace oracle {

// Eigenvalues of a Hermitian matrix via cyclic complex Jacobi rotations.
inline std::vector<double> jacobi_eigenvalues(Eigen::MatrixXcd a,
                                              int max_sweeps = 60) {
  const int n = static_cast<int>(a.rows());
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const std::complex<double> apq = a(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double phi = std::arg(apq);
        const double theta = 0.5 * std::atan2(2.0 * std::abs(apq), app - aqq);
        const double c = std::cos(theta);
        const std::complex<double> s =
            std::sin(theta) * std::exp(std::complex<double>(0.0, phi));
        // columns p,q: A <- A U with U = [[c, -s],[conj(s), c]] on (p,q)
        for (int r = 0; r < n; ++r) {
          const std::complex<double> arp = a(r, p);
          const std::complex<double> arq = a(r, q);
          a(r, p) = c * arp + std::conj(s) * arq;
          a(r, q) = -s * arp + c * arq;
        }
        // rows p,q: A <- U^dagger A
        for (int r = 0; r < n; ++r) {
          const std::complex<double> apr = a(p, r);
          const std::complex<double> aqr = a(q, r);
          a(p, r) = c * apr + s * aqr;
          a(q, r) = -std::conj(s) * apr + c * aqr;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = a(i, i).real();
  std::sort(ev.begin(), ev.end());
  return ev;
}

// Analytic spin-3/2 level for B parallel to the c-axis.
inline double level_bparallel_mhz(double two_d_mhz, double gamma_mhz_per_mt,
                                  double bz_mt, double m) {
  return 0.5 * two_d_mhz * (m * m - 1.25) + gamma_mhz_per_mt * bz_mt * m;
}

// Fixed-step classical RK4 for dy/dt = f(t, y).
inline Eigen::VectorXd rk4(
    const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& f,
    Eigen::VectorXd y, double t0, double t1, int steps) {
  const double h = (t1 - t0) / steps;
  double t = t0;
  for (int i = 0; i < steps; ++i) {
    const Eigen::VectorXd k1 = f(t, y);
    const Eigen::VectorXd k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(t + h, y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return y;
}

}  // namespace oracle
