#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

namespace siv {

using Populations = Eigen::Matrix<double, 5, 1>;
using RateMatrix = Eigen::Matrix<double, 5, 5>;

// Five-level optical pumping cycle: |0>,|1> ground spin doublets,
// |2>,|3> their optically excited counterparts, |4> the dark shelving
// manifold. Rates in 1/us.
struct RateModel {
  double w_pump = 0.0;  // spin-conserving optical excitation
  double k20 = 0.0;     // radiative |2> -> |0>
  double k31 = 0.0;     // radiative |3> -> |1>
  double k24 = 0.0;     // intersystem crossing |2> -> |4>
  double k34 = 0.0;     // intersystem crossing |3> -> |4>
  double k40 = 0.0;     // shelf return |4> -> |0>
  double k41 = 0.0;     // shelf return |4> -> |1>
};

// Room-temperature start: ground doublets equally filled.
Populations equilibrium_populations();

// Generator of dp/dt = G p. rf_exchange adds a symmetric |0> <-> |1>
// exchange modelling a saturating resonant RF drive.
RateMatrix rate_matrix(const RateModel& m, double rf_exchange_per_us = 0.0);

// Propagates the populations for t_us. Uses fixed-step RK4 for short
// intervals and the matrix exponential for long homogeneous ones.
Populations evolve_populations(const RateModel& m, const Populations& init,
                               double t_us, double rf_exchange_per_us = 0.0);

// Unique normalized kernel vector of the generator. The dark model
// (w_pump = 0, no exchange) returns the equilibrium ground split; any other
// degenerate kernel is rejected.
Populations steady_state(const RateModel& m, double rf_exchange_per_us = 0.0);

struct PumpTransient {
  std::vector<double> t_us;
  std::vector<Populations> populations;
  std::vector<double> polarization;  // p1 - p0
};

PumpTransient polarization_transient(const RateModel& m,
                                     const Populations& init,
                                     double duration_us, double dt_us);

// Photoluminescence rate k20 p2 + k31 p3.
double pl_rate(const RateModel& m, const Populations& p);

// Relative PL change (PL_rf - PL_0) / PL_0 between the steady states with
// and without ground-state RF exchange.
double odmr_contrast(const RateModel& m, double rf_exchange_per_us);

// Time at which p1 - p0, starting from equilibrium, first reaches
// (1 - 1/e) of its steady-state value.
double pump_time_constant(const RateModel& m);

// One-dimensional search on w_pump so pump_time_constant hits target_us.
RateModel calibrate_pump_rate(RateModel base, double target_us);

// Reads the exact keys w_pump,k20,k31,k24,k34,k40,k41 from a JSON object
// or a flat "key = value" table.
RateModel load_rate_model(std::istream& in,
                          const std::string& source_name = "config");

}  // namespace siv
