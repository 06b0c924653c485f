#include "siv/pump.hpp"

#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace siv {

namespace {

void check_model(const RateModel& m) {
  for (double r : {m.w_pump, m.k20, m.k31, m.k24, m.k34, m.k40, m.k41})
    if (!(r >= 0.0) || !std::isfinite(r))
      throw std::invalid_argument("rate model entries must be finite and >= 0");
}

void check_populations(const Populations& p) {
  double sum = 0.0;
  for (int i = 0; i < 5; ++i) {
    if (p(i) < -1e-9) throw std::invalid_argument("negative population");
    sum += p(i);
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument("populations must sum to one");
}

double max_rate(const RateMatrix& g) {
  double r = 0.0;
  for (int i = 0; i < 5; ++i) r = std::max(r, -g(i, i));
  return r;
}

Populations rk4_step(const RateMatrix& g, const Populations& p, double h) {
  const Populations k1 = g * p;
  const Populations k2 = g * (p + 0.5 * h * k1);
  const Populations k3 = g * (p + 0.5 * h * k2);
  const Populations k4 = g * (p + h * k3);
  return p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Populations equilibrium_populations() {
  Populations p;
  p << 0.5, 0.5, 0.0, 0.0, 0.0;
  return p;
}

RateMatrix rate_matrix(const RateModel& m, double rf_exchange_per_us) {
  check_model(m);
  if (rf_exchange_per_us < 0.0)
    throw std::invalid_argument("rf exchange rate must be >= 0");
  RateMatrix g = RateMatrix::Zero();
  auto flow = [&g](int from, int to, double rate) {
    g(to, from) += rate;
    g(from, from) -= rate;
  };
  flow(0, 2, m.w_pump);
  flow(1, 3, m.w_pump);
  flow(2, 0, m.k20);
  flow(3, 1, m.k31);
  flow(2, 4, m.k24);
  flow(3, 4, m.k34);
  flow(4, 0, m.k40);
  flow(4, 1, m.k41);
  flow(0, 1, rf_exchange_per_us);
  flow(1, 0, rf_exchange_per_us);
  return g;
}

Populations evolve_populations(const RateModel& m, const Populations& init,
                               double t_us, double rf_exchange_per_us) {
  check_populations(init);
  if (t_us < 0.0) throw std::invalid_argument("evolution time must be >= 0");
  if (t_us == 0.0) return init;
  const RateMatrix g = rate_matrix(m, rf_exchange_per_us);
  const double rate = max_rate(g);
  if (rate == 0.0) return init;
  const double dt_max = 0.02 / rate;
  const long steps = static_cast<long>(std::ceil(t_us / dt_max));
  if (steps > 64) {  // long homogeneous interval: one matrix exponential
    const RateMatrix p = (g * t_us).exp();
    return p * init;
  }
  Populations p = init;
  const double h = t_us / steps;
  for (long i = 0; i < steps; ++i) p = rk4_step(g, p, h);
  return p;
}

Populations steady_state(const RateModel& m, double rf_exchange_per_us) {
  const RateMatrix g = rate_matrix(m, rf_exchange_per_us);
  Eigen::JacobiSVD<RateMatrix> svd(g, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol = 1e-12 * std::max(sv(0), 1.0);
  int null_dim = 0;
  for (int i = 0; i < 5; ++i)
    if (sv(i) < tol) ++null_dim;
  if (null_dim == 0)
    throw std::runtime_error("steady_state: no kernel found");
  if (null_dim > 1) {
    // dark model: both ground states are absorbing, return the thermal split
    if (g.col(0).cwiseAbs().maxCoeff() < tol &&
        g.col(1).cwiseAbs().maxCoeff() < tol && null_dim == 2)
      return equilibrium_populations();
    throw std::domain_error("steady_state: degenerate kernel, state ambiguous");
  }
  Populations p = svd.matrixV().col(4);
  const double sum = p.sum();
  if (std::abs(sum) < 1e-12)
    throw std::runtime_error("steady_state: kernel vector not normalizable");
  p /= sum;
  for (int i = 0; i < 5; ++i) {
    if (p(i) < -1e-9)
      throw std::runtime_error("steady_state: negative component");
    p(i) = std::max(p(i), 0.0);
  }
  return p / p.sum();
}

PumpTransient polarization_transient(const RateModel& m,
                                     const Populations& init,
                                     double duration_us, double dt_us) {
  check_populations(init);
  if (duration_us <= 0.0 || dt_us <= 0.0 || dt_us > duration_us)
    throw std::invalid_argument("bad transient window");
  const RateMatrix g = rate_matrix(m);
  const RateMatrix step = (g * dt_us).exp();
  PumpTransient out;
  const long n = static_cast<long>(std::floor(duration_us / dt_us + 1e-9));
  out.t_us.reserve(n + 1);
  out.populations.reserve(n + 1);
  out.polarization.reserve(n + 1);
  Populations p = init;
  for (long i = 0; i <= n; ++i) {
    out.t_us.push_back(i * dt_us);
    out.populations.push_back(p);
    out.polarization.push_back(p(1) - p(0));
    p = step * p;
  }
  return out;
}

double pl_rate(const RateModel& m, const Populations& p) {
  check_model(m);
  return m.k20 * p(2) + m.k31 * p(3);
}

double odmr_contrast(const RateModel& m, double rf_exchange_per_us) {
  if (m.w_pump <= 0.0)
    throw std::domain_error("odmr_contrast requires active pumping");
  const double pl0 = pl_rate(m, steady_state(m, 0.0));
  if (pl0 <= 0.0) throw std::runtime_error("odmr_contrast: dark baseline");
  const double pl1 = pl_rate(m, steady_state(m, rf_exchange_per_us));
  return (pl1 - pl0) / pl0;
}

double pump_time_constant(const RateModel& m) {
  if (m.w_pump <= 0.0)
    throw std::domain_error("pump_time_constant requires active pumping");
  const double target = (1.0 - std::exp(-1.0)) *
                        (steady_state(m)(1) - steady_state(m)(0));
  if (std::abs(target) < 1e-12)
    throw std::runtime_error("pump_time_constant: no steady polarization");
  const RateMatrix g = rate_matrix(m);
  const Populations p0 = equilibrium_populations();
  // signed so that crossed(t) flips exactly once near the 1-1/e point
  auto excess = [&](double t) {
    const Populations p = (g * t).exp() * p0;
    return ((p(1) - p(0)) - target) * (target > 0 ? 1.0 : -1.0);
  };
  // coarse bracket with an iterated step, then verify against the exact
  // evaluator (the iterated march rounds differently) and bisect on time
  double lo = 0.0, hi = -1.0;
  {
    const double dt = 0.05;
    const RateMatrix step = (g * dt).exp();
    Populations p = p0;
    for (long i = 1; i <= 2000000; ++i) {
      p = step * p;
      const double d = p(1) - p(0);
      if ((target > 0 && d >= target) || (target < 0 && d <= target)) {
        lo = (i - 1) * dt;
        hi = i * dt;
        break;
      }
    }
    if (hi < 0.0)
      throw std::runtime_error("pump_time_constant: no crossing found");
    while (lo > 0.0 && excess(lo) >= 0.0) lo = std::max(0.0, lo - dt);
    while (excess(hi) < 0.0) hi += dt;
  }
  for (int i = 0; i < 80 && hi - lo > 1e-13 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) >= 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

RateModel calibrate_pump_rate(RateModel base, double target_us) {
  if (target_us <= 0.0)
    throw std::invalid_argument("calibration target must be > 0");
  double wlo = 1e-4, whi = 100.0;
  base.w_pump = wlo;
  if (pump_time_constant(base) < target_us)
    throw std::runtime_error("calibration target too slow for rate set");
  base.w_pump = whi;
  if (pump_time_constant(base) > target_us)
    throw std::runtime_error("calibration target too fast for rate set");
  for (int i = 0; i < 80; ++i) {
    const double w = std::sqrt(wlo * whi);
    base.w_pump = w;
    if (pump_time_constant(base) > target_us)
      wlo = w;
    else
      whi = w;
  }
  base.w_pump = std::sqrt(wlo * whi);
  return base;
}

RateModel load_rate_model(std::istream& in, const std::string& source_name) {
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  const size_t first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos)
    throw std::runtime_error(source_name + ": empty rate-model config");

  std::map<std::string, double> kv;
  if (text[first] == '{') {
    const auto j = nlohmann::json::parse(text);
    for (const auto& [key, val] : j.items()) {
      if (!val.is_number())
        throw std::runtime_error(source_name + ": key '" + key +
                                 "' is not a number");
      kv[key] = val.get<double>();
    }
  } else {
    std::istringstream lines(text);
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
      ++lineno;
      const size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error(source_name + ":" + std::to_string(lineno) +
                                 ": expected key = value");
      auto trim = [](std::string s) {
        const size_t a = s.find_first_not_of(" \t\r");
        const size_t b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      const std::string val = trim(line.substr(eq + 1));
      try {
        size_t used = 0;
        kv[key] = std::stod(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
      } catch (const std::exception&) {
        throw std::runtime_error(source_name + ":" + std::to_string(lineno) +
                                 ": bad numeric value '" + val + "'");
      }
    }
  }

  RateModel m;
  const std::vector<std::pair<std::string, double*>> fields = {
      {"w_pump", &m.w_pump}, {"k20", &m.k20}, {"k31", &m.k31},
      {"k24", &m.k24},       {"k34", &m.k34}, {"k40", &m.k40},
      {"k41", &m.k41}};
  std::string missing;
  for (const auto& [key, dst] : fields) {
    const auto it = kv.find(key);
    if (it == kv.end()) {
      missing += missing.empty() ? key : ", " + key;
      continue;
    }
    *dst = it->second;
    kv.erase(it);
  }
  if (!missing.empty())
    throw std::runtime_error(source_name + ": missing keys: " + missing);
  if (!kv.empty())
    throw std::runtime_error(source_name + ": unknown key '" +
                             kv.begin()->first + "'");
  check_model(m);
  return m;
}

}  // namespace siv
