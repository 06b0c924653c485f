#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "siv/csv.hpp"

namespace siv {

// Closed-form signal models:
//   Rabi           A + B cos(2 pi nu x - phi) exp(-x/T)
//   Fid            A cos(2 pi nu x + phi) exp(-x/T)
//   ExpDecay       A exp(-x/T)
//   StretchedExp   A exp(-(x/T)^n)
//   Saturation     S x / (P0 + x)
//   SqrtLinewidth  L0 + a sqrt(x)
enum class ModelKind { Rabi, Fid, ExpDecay, StretchedExp, Saturation,
                       SqrtLinewidth };

struct DecayModel {
  ModelKind kind = ModelKind::ExpDecay;
  std::vector<double> params;
};

int model_arity(ModelKind kind);
const std::vector<std::string>& param_names(ModelKind kind);

// Checks arity and positivity (time constants, n, P0). Throws
// invalid_argument on violation.
void validate_model(const DecayModel& m);

double evaluate_at(const DecayModel& m, double x);
std::vector<double> evaluate(const DecayModel& m,
                             const std::vector<double>& x);

// d f / d params, one row per x point. Analytic.
Eigen::MatrixXd model_jacobian(const DecayModel& m,
                               const std::vector<double>& x);

struct FitOptions {
  std::vector<double> lower;  // empty = unbounded below
  std::vector<double> upper;  // empty = unbounded above
  int max_iterations = 500;
  int multi_starts = 8;  // jittered restarts guard against noisy data; 1 disables
  std::uint64_t seed = 42;
};

struct FitResult {
  DecayModel model;
  std::vector<double> stderr_params;  // empty unless converged
  double rss = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string diagnostic;  // nonempty when flagged
};

// Damped Gauss-Newton least squares. Accepted steps never increase the
// cost; stops on relative cost change < 1e-10 or gradient norm < 1e-8.
// Non-convergence and singular Jacobians are flagged, not thrown; bad
// preconditions (too few points, init outside bounds) do throw.
FitResult fit(ModelKind kind, const XyData& data,
              const std::vector<double>& init, const FitOptions& opts = {});

struct GuessResult {
  std::vector<double> params;
  bool degenerate = false;  // constant data, guess is a flat placeholder
};

GuessResult initial_guess(ModelKind kind, const XyData& data);

std::string fit_result_json(const FitResult& r);

}  // namespace siv
