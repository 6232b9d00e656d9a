#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ccflow/math.hpp"
#include "ccflow/rng.hpp"

namespace ccflow {

/// Mean demand level mu(t). Constant and sinusoidal levels are evaluated in
/// closed form; tabulated levels interpolate linearly and clamp outside the
/// table.
struct MeanLevel {
  enum class Kind { Constant, Sinusoidal, Tabulated };

  Kind kind = Kind::Constant;
  double level = 0.0;                                // constant
  double offset = 0.0, amplitude = 0.0;              // sinusoidal
  double omega = 0.0, phase = 0.0;                   // sinusoidal
  std::vector<std::pair<double, double>> table;      // tabulated (time, value)

  static MeanLevel constant(double value) {
    MeanLevel m;
    m.kind = Kind::Constant;
    m.level = value;
    return m;
  }

  static MeanLevel sinusoidal(double offset, double amplitude, double omega,
                              double phase = 0.0) {
    MeanLevel m;
    m.kind = Kind::Sinusoidal;
    m.offset = offset;
    m.amplitude = amplitude;
    m.omega = omega;
    m.phase = phase;
    return m;
  }

  static MeanLevel tabulated(std::vector<std::pair<double, double>> points) {
    if (points.size() < 2)
      throw std::invalid_argument("tabulated mean level needs at least two points");
    for (std::size_t i = 1; i < points.size(); ++i)
      if (!(points[i].first > points[i - 1].first))
        throw std::invalid_argument("tabulated mean level times must be strictly increasing");
    MeanLevel m;
    m.kind = Kind::Tabulated;
    m.table = std::move(points);
    return m;
  }

  double operator()(double t) const {
    switch (kind) {
      case Kind::Constant:
        return level;
      case Kind::Sinusoidal:
        return offset + amplitude * std::sin(omega * t + phase);
      case Kind::Tabulated: {
        if (t <= table.front().first) return table.front().second;
        if (t >= table.back().first) return table.back().second;
        auto it = std::upper_bound(table.begin(), table.end(), t,
                                   [](double x, const auto& p) { return x < p.first; });
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        double w = (t - lo.first) / (hi.first - lo.first);
        return lo.second + w * (hi.second - lo.second);
      }
    }
    return 0.0;
  }
};

enum class QuantileScale { StdDev, Variance };

/// Quadrature policy for the mean integral when mu(t) has no closed-form
/// antiderivative (tabulated levels).
struct MomentQuadrature {
  double abs_tol = 1e-12;
};

/// Ornstein-Uhlenbeck demand process dY = kappa (mu(t) - Y) dt + sigma dW,
/// Y_{t0} = y0.
struct OUProcess {
  double t0 = 0.0;
  double y0 = 0.0;
  double kappa = 1.0;
  double sigma = 1.0;
  MeanLevel mean_level;
  QuantileScale quantile_scale = QuantileScale::StdDev;
  MomentQuadrature quadrature;

  OUProcess() = default;
  OUProcess(double t0_, double y0_, double kappa_, double sigma_, MeanLevel mu)
      : t0(t0_), y0(y0_), kappa(kappa_), sigma(sigma_), mean_level(std::move(mu)) {
    if (!(kappa > 0.0)) throw std::invalid_argument("OUProcess: kappa must be > 0");
    if (!(sigma > 0.0)) throw std::invalid_argument("OUProcess: sigma must be > 0");
  }
};

namespace detail {

inline void require_time(const OUProcess& p, double t) {
  if (t < p.t0) throw std::domain_error("OUProcess: t < t0");
}

// kappa * int_a^b exp(-kappa (t - s)) mu(s) ds for one linear segment of mu,
// evaluated by adaptive Simpson (the tabulated path).
inline double mean_integral_quadrature(const OUProcess& p, double t, double tol) {
  AdaptiveSimpson quad(tol);
  auto f = [&](double s) { return std::exp(-p.kappa * (t - s)) * p.mean_level(s); };
  if (p.mean_level.kind != MeanLevel::Kind::Tabulated)
    return p.kappa * quad.integrate(f, p.t0, t);
  // Split at table knots so the kinks of the interpolant stay on panel ends.
  double acc = 0.0, lo = p.t0;
  for (const auto& pt : p.mean_level.table) {
    if (pt.first <= lo) continue;
    if (pt.first >= t) break;
    acc += quad.integrate(f, lo, pt.first);
    lo = pt.first;
  }
  acc += quad.integrate(f, lo, t);
  return p.kappa * acc;
}

}  // namespace detail

/// m_OUP(t) evaluated with the mean integral done by adaptive quadrature
/// regardless of the mean-level kind. Serves as the independent cross-check
/// for the closed forms and as the evaluation path for tabulated levels.
inline double mean_quadrature(const OUProcess& p, double t, double tol = 1e-12) {
  detail::require_time(p, t);
  if (t == p.t0) return p.y0;
  return p.y0 * std::exp(-p.kappa * (t - p.t0)) + detail::mean_integral_quadrature(p, t, tol);
}

/// m_OUP(t) = y0 e^{-kappa (t-t0)} + kappa int_{t0}^t e^{-kappa (t-s)} mu(s) ds.
inline double mean(const OUProcess& p, double t) {
  detail::require_time(p, t);
  const double k = p.kappa;
  const double decay = std::exp(-k * (t - p.t0));
  switch (p.mean_level.kind) {
    case MeanLevel::Kind::Constant: {
      const double mu = p.mean_level.level;
      return mu + (p.y0 - mu) * decay;
    }
    case MeanLevel::Kind::Sinusoidal: {
      const auto& m = p.mean_level;
      const double den = k * k + m.omega * m.omega;
      auto kernel = [&](double s) {
        return k * std::sin(m.omega * s + m.phase) - m.omega * std::cos(m.omega * s + m.phase);
      };
      double osc = m.amplitude * k * (kernel(t) - decay * kernel(p.t0)) / den;
      return p.y0 * decay + m.offset * (1.0 - decay) + osc;
    }
    case MeanLevel::Kind::Tabulated:
      return mean_quadrature(p, t, p.quadrature.abs_tol);
  }
  return 0.0;
}

/// m_OUP'(t) = kappa (mu(t) - m_OUP(t)), from the moment ODE.
inline double mean_deriv(const OUProcess& p, double t) {
  return p.kappa * (p.mean_level(t) - mean(p, t));
}

/// v_OUP(t) = sigma^2/(2 kappa) (1 - e^{-2 kappa (t-t0)}).
inline double variance(const OUProcess& p, double t) {
  detail::require_time(p, t);
  return p.sigma * p.sigma / (2.0 * p.kappa) * (-std::expm1(-2.0 * p.kappa * (t - p.t0)));
}

/// cov(Y_s, Y_t) = sigma^2 (e^{-kappa|t-s|} - e^{-kappa(s+t-2 t0)}) / (2 kappa).
/// Arguments commute.
inline double covariance(const OUProcess& p, double s, double t) {
  if (s > t) std::swap(s, t);
  if (s < p.t0) throw std::domain_error("covariance: s < t0");
  const double k = p.kappa;
  return p.sigma * p.sigma / (2.0 * k) *
         (std::exp(-k * (t - s)) - std::exp(-k * (s + t - 2.0 * p.t0)));
}

/// Factorization cov(Y_s, Y_t) = h1(s) h2(t) for s <= t, plus derivatives.
struct CovFactors {
  double h1;
  double h2;
  double h1_deriv;
  double h2_deriv;
};

inline CovFactors cov_factors(const OUProcess& p, double t) {
  detail::require_time(p, t);
  const double k = p.kappa, s2 = p.sigma * p.sigma;
  CovFactors f;
  f.h1 = std::exp(k * t) - std::exp(-k * (t - 2.0 * p.t0));
  f.h2 = s2 / (2.0 * k) * std::exp(-k * t);
  f.h1_deriv = k * std::exp(k * t) + k * std::exp(-k * (t - 2.0 * p.t0));
  f.h2_deriv = -0.5 * s2 * std::exp(-k * t);
  return f;
}

struct TransitionMoments {
  double mean;
  double var;
};

/// Conditional law of Y_t given Y_s = y: normal with the moments below.
inline TransitionMoments transition_moments(const OUProcess& p, double s, double y, double t) {
  if (s < p.t0) throw std::domain_error("transition_moments: s < t0");
  if (!(s < t)) throw std::domain_error("transition_moments: requires s < t");
  const double decay = std::exp(-p.kappa * (t - s));
  TransitionMoments tm;
  tm.mean = mean(p, t) + decay * (y - mean(p, s));
  tm.var = p.sigma * p.sigma / (2.0 * p.kappa) * (-std::expm1(-2.0 * p.kappa * (t - s)));
  return tm;
}

/// theta-quantile level: P(Y_t <= q) = 1 - theta. The paper's literal formula
/// scales the normal quantile by the variance; the statistically consistent
/// scale is the standard deviation, selectable via OUProcess::quantile_scale.
inline double quantile(const OUProcess& p, double t, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::domain_error("quantile: theta outside (0,1)");
  detail::require_time(p, t);
  if (t == p.t0) return p.y0;
  const double v = variance(p, t);
  const double scale = p.quantile_scale == QuantileScale::StdDev ? std::sqrt(v) : v;
  return mean(p, t) + scale * norm_inv(1.0 - theta);
}

/// Exact path sampling on a strictly increasing grid starting at t0. Each path
/// draws from its own derived RNG stream, so results are reproducible under
/// any partitioning of paths across workers.
class PathMatrix {
 public:
  PathMatrix(std::size_t n_paths, std::size_t n_times)
      : n_paths_(n_paths), n_times_(n_times), data_(n_paths * n_times) {}

  double& at(std::size_t path, std::size_t k) { return data_[path * n_times_ + k]; }
  double at(std::size_t path, std::size_t k) const { return data_[path * n_times_ + k]; }
  std::size_t n_paths() const { return n_paths_; }
  std::size_t n_times() const { return n_times_; }

 private:
  std::size_t n_paths_, n_times_;
  std::vector<double> data_;
};

inline PathMatrix sample_paths(const OUProcess& p, const std::vector<double>& grid,
                               std::size_t n_paths, std::uint64_t seed) {
  if (grid.empty() || grid.front() != p.t0)
    throw std::domain_error("sample_paths: grid must start at t0");
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1]))
      throw std::domain_error("sample_paths: grid must be strictly increasing");
  if (n_paths < 1) throw std::domain_error("sample_paths: n_paths >= 1 required");

  const std::size_t n = grid.size();
  std::vector<double> m(n), decay(n), sd(n);
  m[0] = p.y0;
  for (std::size_t k = 1; k < n; ++k) {
    m[k] = mean(p, grid[k]);
    const double dt = grid[k] - grid[k - 1];
    decay[k] = std::exp(-p.kappa * dt);
    sd[k] = std::sqrt(p.sigma * p.sigma / (2.0 * p.kappa) * (-std::expm1(-2.0 * p.kappa * dt)));
  }

  PathMatrix paths(n_paths, n);
  for (std::size_t i = 0; i < n_paths; ++i) {
    Rng rng(seed, i);
    double y = p.y0;
    paths.at(i, 0) = y;
    for (std::size_t k = 1; k < n; ++k) {
      y = m[k] + decay[k] * (y - m[k - 1]) + sd[k] * rng.next_normal();
      paths.at(i, k) = y;
    }
  }
  return paths;
}

}  // namespace ccflow
