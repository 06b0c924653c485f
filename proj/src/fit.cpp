#include "siv/fit.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace siv {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPosFloor = 1e-12;

struct KindInfo {
  const char* name;
  std::vector<std::string> params;
  std::vector<int> positive;  // indices that must stay > 0
  int osc_amp = -1;           // oscillation amplitude index, -1 if none
  int osc_phase = -1;
};

const KindInfo& info(ModelKind kind) {
  static const KindInfo table[] = {
      {"Rabi", {"A", "B", "nu", "phi", "T"}, {4}, 1, 3},
      {"Fid", {"A", "nu", "phi", "T"}, {3}, 0, 2},
      {"ExpDecay", {"A", "T"}, {1}, -1, -1},
      {"StretchedExp", {"A", "T", "n"}, {1, 2}, -1, -1},
      {"Saturation", {"S_max", "P0"}, {1}, -1, -1},
      {"SqrtLinewidth", {"LW0", "a"}, {}, -1, -1},
  };
  return table[static_cast<int>(kind)];
}

bool needs_nonnegative_x(ModelKind kind) {
  return kind == ModelKind::StretchedExp || kind == ModelKind::Saturation ||
         kind == ModelKind::SqrtLinewidth;
}

double wrap_phase(double phi) {
  phi = std::remainder(phi, kTwoPi);
  if (phi <= -std::numbers::pi) phi += kTwoPi;
  return phi;
}

double eval_one(ModelKind kind, const std::vector<double>& p, double x) {
  switch (kind) {
    case ModelKind::Rabi:
      return p[0] +
             p[1] * std::cos(kTwoPi * p[2] * x - p[3]) * std::exp(-x / p[4]);
    case ModelKind::Fid:
      return p[0] * std::cos(kTwoPi * p[1] * x + p[2]) * std::exp(-x / p[3]);
    case ModelKind::ExpDecay:
      return p[0] * std::exp(-x / p[1]);
    case ModelKind::StretchedExp: {
      const double u = x > 0.0 ? std::pow(x / p[1], p[2]) : 0.0;
      return p[0] * std::exp(-u);
    }
    case ModelKind::Saturation:
      return p[0] * x / (p[1] + x);
    case ModelKind::SqrtLinewidth:
      return p[0] + p[1] * std::sqrt(x);
  }
  throw std::logic_error("unreachable model kind");
}

void jac_row(ModelKind kind, const std::vector<double>& p, double x,
             Eigen::MatrixXd& j, int row) {
  switch (kind) {
    case ModelKind::Rabi: {
      const double env = std::exp(-x / p[4]);
      const double arg = kTwoPi * p[2] * x - p[3];
      const double c = std::cos(arg), s = std::sin(arg);
      j(row, 0) = 1.0;
      j(row, 1) = c * env;
      j(row, 2) = -p[1] * s * env * kTwoPi * x;
      j(row, 3) = p[1] * s * env;
      j(row, 4) = p[1] * c * env * x / (p[4] * p[4]);
      return;
    }
    case ModelKind::Fid: {
      const double env = std::exp(-x / p[3]);
      const double arg = kTwoPi * p[1] * x + p[2];
      const double c = std::cos(arg), s = std::sin(arg);
      j(row, 0) = c * env;
      j(row, 1) = -p[0] * s * env * kTwoPi * x;
      j(row, 2) = -p[0] * s * env;
      j(row, 3) = p[0] * c * env * x / (p[3] * p[3]);
      return;
    }
    case ModelKind::ExpDecay: {
      const double env = std::exp(-x / p[1]);
      j(row, 0) = env;
      j(row, 1) = p[0] * env * x / (p[1] * p[1]);
      return;
    }
    case ModelKind::StretchedExp: {
      if (x <= 0.0) {
        j(row, 0) = 1.0;
        j(row, 1) = 0.0;
        j(row, 2) = 0.0;
        return;
      }
      const double u = std::pow(x / p[1], p[2]);
      const double env = std::exp(-u);
      j(row, 0) = env;
      j(row, 1) = p[0] * env * u * p[2] / p[1];
      j(row, 2) = -p[0] * env * u * std::log(x / p[1]);
      return;
    }
    case ModelKind::Saturation: {
      j(row, 0) = x / (p[1] + x);
      j(row, 1) = -p[0] * x / ((p[1] + x) * (p[1] + x));
      return;
    }
    case ModelKind::SqrtLinewidth: {
      j(row, 0) = 1.0;
      j(row, 1) = std::sqrt(x);
      return;
    }
  }
  throw std::logic_error("unreachable model kind");
}

void check_x(ModelKind kind, const std::vector<double>& x) {
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("x must be finite");
    if (v < 0.0 && needs_nonnegative_x(kind))
      throw std::invalid_argument("x must be >= 0 for this model");
  }
}

struct Problem {
  ModelKind kind;
  const XyData* data;
  std::vector<double> lo, hi;

  double cost(const std::vector<double>& p) const {
    double c = 0.0;
    for (size_t i = 0; i < data->x.size(); ++i) {
      const double r = data->y[i] - eval_one(kind, p, data->x[i]);
      const double w =
          data->sigma.empty() ? 1.0 : 1.0 / (data->sigma[i] * data->sigma[i]);
      c += w * r * r;
    }
    return c;
  }

  void clamp(std::vector<double>& p) const {
    for (size_t j = 0; j < p.size(); ++j)
      p[j] = std::min(hi[j], std::max(lo[j], p[j]));
    const KindInfo& k = info(kind);
    if (k.osc_phase >= 0) p[k.osc_phase] = wrap_phase(p[k.osc_phase]);
  }
};

struct LmOutcome {
  std::vector<double> p;
  double cost = 0.0;
  bool converged = false;
  int iterations = 0;
};

LmOutcome levenberg_marquardt(const Problem& prob, std::vector<double> p,
                              int max_iter) {
  const int n = static_cast<int>(prob.data->x.size());
  const int np = static_cast<int>(p.size());
  prob.clamp(p);
  double cost = prob.cost(p);
  double lambda = 1e-3;
  LmOutcome out{p, cost, false, 0};
  Eigen::MatrixXd j(n, np);
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    Eigen::VectorXd r(n), w(n);
    for (int i = 0; i < n; ++i) {
      r(i) = prob.data->y[i] - eval_one(prob.kind, p, prob.data->x[i]);
      const double s = prob.data->sigma.empty() ? 1.0 : prob.data->sigma[i];
      w(i) = 1.0 / (s * s);
      jac_row(prob.kind, p, prob.data->x[i], j, i);
    }
    const Eigen::MatrixXd jtw = j.transpose() * w.asDiagonal();
    const Eigen::MatrixXd h = jtw * j;
    const Eigen::VectorXd g = jtw * r;
    if (g.lpNorm<Eigen::Infinity>() < 1e-8) {
      out.p = p;
      out.cost = cost;
      out.converged = true;
      return out;
    }
    bool stepped = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::MatrixXd damped = h;
      for (int d = 0; d < np; ++d)
        damped(d, d) += lambda * std::max(h(d, d), 1e-12);
      const Eigen::VectorXd delta = damped.ldlt().solve(g);
      if (!delta.allFinite()) {
        lambda = std::min(lambda * 4.0, 1e12);
        continue;
      }
      std::vector<double> trial = p;
      for (int d = 0; d < np; ++d) trial[d] += delta(d);
      prob.clamp(trial);
      const double trial_cost = prob.cost(trial);
      if (trial_cost <= cost) {
        const double drop = cost - trial_cost;
        p = trial;
        const bool tiny = drop < 1e-10 * std::max(cost, 1e-300);
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        if (tiny || cost < 1e-300) {
          out.p = p;
          out.cost = cost;
          out.converged = true;
          return out;
        }
        break;
      }
      lambda = std::min(lambda * 4.0, 1e12);
    }
    if (!stepped) {
      // damping saturated without an acceptable step: local optimum
      out.p = p;
      out.cost = cost;
      out.converged = true;
      return out;
    }
  }
  out.p = p;
  out.cost = cost;
  return out;
}

}  // namespace

int model_arity(ModelKind kind) {
  return static_cast<int>(info(kind).params.size());
}

const std::vector<std::string>& param_names(ModelKind kind) {
  return info(kind).params;
}

void validate_model(const DecayModel& m) {
  const KindInfo& k = info(m.kind);
  if (m.params.size() != k.params.size())
    throw std::invalid_argument(std::string(k.name) + " expects " +
                                std::to_string(k.params.size()) +
                                " parameters, got " +
                                std::to_string(m.params.size()));
  for (double v : m.params)
    if (!std::isfinite(v))
      throw std::invalid_argument("model parameters must be finite");
  for (int idx : k.positive)
    if (m.params[idx] <= 0.0)
      throw std::invalid_argument(std::string(k.name) + " parameter " +
                                  k.params[idx] + " must be > 0");
}

double evaluate_at(const DecayModel& m, double x) {
  validate_model(m);
  check_x(m.kind, {x});
  return eval_one(m.kind, m.params, x);
}

std::vector<double> evaluate(const DecayModel& m,
                             const std::vector<double>& x) {
  validate_model(m);
  check_x(m.kind, x);
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = eval_one(m.kind, m.params, x[i]);
  return out;
}

Eigen::MatrixXd model_jacobian(const DecayModel& m,
                               const std::vector<double>& x) {
  validate_model(m);
  check_x(m.kind, x);
  Eigen::MatrixXd j(x.size(), m.params.size());
  for (size_t i = 0; i < x.size(); ++i)
    jac_row(m.kind, m.params, x[i], j, static_cast<int>(i));
  return j;
}

FitResult fit(ModelKind kind, const XyData& data,
              const std::vector<double>& init, const FitOptions& opts) {
  const KindInfo& k = info(kind);
  const int np = static_cast<int>(k.params.size());
  const int n = static_cast<int>(data.x.size());
  if (data.y.size() != data.x.size())
    throw std::invalid_argument("x and y lengths differ");
  if (!data.sigma.empty() && data.sigma.size() != data.x.size())
    throw std::invalid_argument("sigma length differs from x");
  for (double s : data.sigma)
    if (!(s > 0.0)) throw std::invalid_argument("sigma values must be > 0");
  if (n < std::max(2 * np, np + 2))
    throw std::invalid_argument("need at least " +
                                std::to_string(std::max(2 * np, np + 2)) +
                                " points to fit " + k.name);
  check_x(kind, data.x);
  validate_model({kind, init});

  Problem prob;
  prob.kind = kind;
  prob.data = &data;
  prob.lo.assign(np, -std::numeric_limits<double>::infinity());
  prob.hi.assign(np, std::numeric_limits<double>::infinity());
  if (!opts.lower.empty()) {
    if (static_cast<int>(opts.lower.size()) != np)
      throw std::invalid_argument("lower bound arity mismatch");
    prob.lo = opts.lower;
  }
  if (!opts.upper.empty()) {
    if (static_cast<int>(opts.upper.size()) != np)
      throw std::invalid_argument("upper bound arity mismatch");
    prob.hi = opts.upper;
  }
  for (int idx : k.positive) prob.lo[idx] = std::max(prob.lo[idx], kPosFloor);
  for (int d = 0; d < np; ++d) {
    if (prob.lo[d] > prob.hi[d])
      throw std::invalid_argument("lower bound exceeds upper bound");
    if (init[d] < prob.lo[d] - 1e-15 || init[d] > prob.hi[d] + 1e-15)
      throw std::invalid_argument("initial guess outside bounds");
  }

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  LmOutcome best;
  bool have = false;
  for (int s = 0; s < std::max(1, opts.multi_starts); ++s) {
    std::vector<double> start = init;
    if (s > 0) {
      for (int d = 0; d < np; ++d)
        start[d] += 0.2 * std::max(std::abs(init[d]), 1.0) * u(rng);
      prob.clamp(start);
    }
    const LmOutcome out =
        levenberg_marquardt(prob, start, opts.max_iterations);
    const bool better =
        !have || (out.converged && !best.converged) ||
        (out.converged == best.converged && out.cost < best.cost);
    if (better) best = out;
    have = true;
  }

  // canonical oscillation sign follows the caller's init
  if (k.osc_amp >= 0 && init[k.osc_amp] != 0.0 &&
      std::signbit(best.p[k.osc_amp]) != std::signbit(init[k.osc_amp]) &&
      best.p[k.osc_amp] != 0.0) {
    best.p[k.osc_amp] = -best.p[k.osc_amp];
    best.p[k.osc_phase] = wrap_phase(best.p[k.osc_phase] + std::numbers::pi);
  }

  FitResult res;
  res.model = {kind, best.p};
  res.rss = best.cost;
  res.converged = best.converged;
  res.iterations = best.iterations;

  Eigen::MatrixXd j(n, np);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    jac_row(kind, best.p, data.x[i], j, i);
    const double s = data.sigma.empty() ? 1.0 : data.sigma[i];
    w(i) = 1.0 / (s * s);
  }
  const Eigen::MatrixXd h = j.transpose() * w.asDiagonal() * j;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(np - 1);
  if (!(smin > smax * 1e-12)) {
    res.converged = false;
    res.diagnostic =
        "singular jacobian at solution, condition > 1e12 (smax " +
        std::to_string(smax) + ")";
    return res;
  }
  if (!res.converged) {
    res.diagnostic = "no convergence after " +
                     std::to_string(opts.max_iterations) + " iterations";
    return res;
  }
  const double dof = std::max(1, n - np);
  const double s2 = best.cost / dof;
  const Eigen::MatrixXd cov = s2 * h.inverse();
  res.stderr_params.resize(np);
  for (int d = 0; d < np; ++d)
    res.stderr_params[d] = std::sqrt(std::max(0.0, cov(d, d)));
  return res;
}

GuessResult initial_guess(ModelKind kind, const XyData& data) {
  const int n = static_cast<int>(data.x.size());
  if (n < 4) throw std::invalid_argument("initial_guess needs >= 4 points");
  if (data.y.size() != data.x.size())
    throw std::invalid_argument("x and y lengths differ");
  const double ymax = *std::max_element(data.y.begin(), data.y.end());
  const double ymin = *std::min_element(data.y.begin(), data.y.end());
  const double span = data.x.back() - data.x.front();
  const double yabs = std::max(std::abs(ymax), std::abs(ymin));
  GuessResult g;
  if (ymax - ymin <= 1e-12 * std::max(yabs, 1.0)) {
    g.degenerate = true;
    const double c = data.y.front();
    switch (kind) {
      case ModelKind::Rabi:
        g.params = {c, 0.0, 1.0 / std::max(span, 1.0), 0.0,
                    std::max(span, 1.0)};
        break;
      case ModelKind::Fid:
        g.params = {c, 1.0 / std::max(span, 1.0), 0.0, std::max(span, 1.0)};
        break;
      case ModelKind::ExpDecay:
        g.params = {c, std::max(span, 1.0)};
        break;
      case ModelKind::StretchedExp:
        g.params = {c, std::max(span, 1.0), 1.0};
        break;
      case ModelKind::Saturation:
        g.params = {c, std::max(span, 1.0)};
        break;
      case ModelKind::SqrtLinewidth:
        g.params = {c, 0.0};
        break;
    }
    return g;
  }

  auto dominant_frequency = [&](double mean) {
    // rigid DFT on the (nearly) uniform grid, dominant nonzero bin with
    // parabolic refinement between neighbours
    const double dt = span / (n - 1);
    std::vector<double> power(n / 2 + 1, 0.0);
    int kbest = 1;
    for (int k = 1; k <= n / 2; ++k) {
      std::complex<double> acc = 0.0;
      for (int i = 0; i < n; ++i)
        acc += (data.y[i] - mean) *
               std::exp(std::complex<double>(0.0, -kTwoPi * k * i / n));
      power[k] = std::norm(acc);
      if (power[k] > power[kbest]) kbest = k;
    }
    double shift = 0.0;
    if (kbest > 1 && kbest < n / 2) {
      const double pl = power[kbest - 1], pc = power[kbest],
                   pr = power[kbest + 1];
      const double denom = pl - 2.0 * pc + pr;
      if (denom < 0.0) shift = std::clamp(0.5 * (pl - pr) / denom, -0.5, 0.5);
    }
    return (kbest + shift) / (n * dt);
  };
  auto quadrature = [&](double mean, double nu, double& amp, double& a,
                        double& b) {
    a = 0.0;
    b = 0.0;
    for (int i = 0; i < n; ++i) {
      a += (data.y[i] - mean) * std::cos(kTwoPi * nu * data.x[i]);
      b += (data.y[i] - mean) * std::sin(kTwoPi * nu * data.x[i]);
    }
    a *= 2.0 / n;
    b *= 2.0 / n;
    amp = std::hypot(a, b);
  };

  switch (kind) {
    case ModelKind::Rabi: {
      double mean = 0.0;
      for (double v : data.y) mean += v;
      mean /= n;
      const double nu = dominant_frequency(mean);
      double amp, a, b;
      quadrature(mean, nu, amp, a, b);
      // B cos(wx - phi): a = B cos(phi), b = B sin(phi)
      g.params = {mean, amp, nu, std::atan2(b, a), span};
      break;
    }
    case ModelKind::Fid: {
      const double nu = dominant_frequency(0.0);
      double amp, a, b;
      quadrature(0.0, nu, amp, a, b);
      // A cos(wx + phi): a = A cos(phi), b = -A sin(phi)
      g.params = {amp, nu, std::atan2(-b, a), span};
      break;
    }
    case ModelKind::ExpDecay: {
      // log-linear regression on the usable magnitude range
      const double sign = (std::abs(ymax) >= std::abs(ymin)) ? 1.0 : -1.0;
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      int m = 0;
      for (int i = 0; i < n; ++i) {
        const double v = sign * data.y[i];
        if (v < 1e-3 * yabs) continue;
        const double ly = std::log(v);
        sx += data.x[i];
        sy += ly;
        sxx += data.x[i] * data.x[i];
        sxy += data.x[i] * ly;
        ++m;
      }
      if (m < 2) {
        g.params = {sign * yabs, std::max(span, 1.0)};
        g.degenerate = true;
        break;
      }
      const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
      const double icpt = (sy - slope * sx) / m;
      const double t = slope < -1e-300 ? -1.0 / slope : std::max(span, 1.0);
      g.params = {sign * std::exp(icpt), t};
      break;
    }
    case ModelKind::StretchedExp: {
      const double a0 = data.y.front();
      double t = span;
      for (int i = 1; i < n; ++i) {
        if (std::abs(data.y[i]) <= std::abs(a0) * std::exp(-1.0)) {
          t = data.x[i];
          break;
        }
      }
      g.params = {a0, std::max(t, kPosFloor), 1.0};
      break;
    }
    case ModelKind::Saturation: {
      const double s = ymax;
      double p0 = 0.5 * std::max(span, kPosFloor);
      for (int i = 0; i < n; ++i) {
        if (data.y[i] >= 0.5 * s && data.x[i] > 0.0) {
          p0 = data.x[i];
          break;
        }
      }
      g.params = {s, p0};
      break;
    }
    case ModelKind::SqrtLinewidth: {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (int i = 0; i < n; ++i) {
        const double r = std::sqrt(std::max(0.0, data.x[i]));
        sx += r;
        sy += data.y[i];
        sxx += r * r;
        sxy += r * data.y[i];
      }
      const double denom = n * sxx - sx * sx;
      const double a = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
      g.params = {(sy - a * sx) / n, a};
      break;
    }
  }
  return g;
}

std::string fit_result_json(const FitResult& r) {
  nlohmann::ordered_json out;
  out["model"] = info(r.model.kind).name;
  nlohmann::ordered_json params, err;
  const auto& names = param_names(r.model.kind);
  for (size_t i = 0; i < names.size(); ++i) {
    params[names[i]] = r.model.params[i];
    if (!r.stderr_params.empty()) err[names[i]] = r.stderr_params[i];
  }
  out["params"] = params;
  out["stderr"] = r.stderr_params.empty() ? nlohmann::ordered_json() : err;
  out["rss"] = r.rss;
  out["converged"] = r.converged;
  out["iterations"] = r.iterations;
  if (!r.diagnostic.empty()) out["diagnostic"] = r.diagnostic;
  return out.dump(2) + "\n";
}

}  // namespace siv
