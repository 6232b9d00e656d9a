#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "ccflow/demand.hpp"
#include "ccflow/math.hpp"

namespace ccflow {

/// Moving boundary S(t) with derivative, either as an analytic pair or as
/// values tabulated on a uniform grid (central differences in the interior,
/// one-sided at the ends).
class Boundary {
 public:
  static Boundary analytic(std::function<double(double)> value,
                           std::function<double(double)> deriv) {
    Boundary b;
    b.value_ = std::move(value);
    b.deriv_ = std::move(deriv);
    return b;
  }

  static Boundary from_grid(double t0, double dt, std::vector<double> values) {
    if (values.size() < 3) throw std::invalid_argument("Boundary: need at least 3 grid values");
    if (!(dt > 0)) throw std::invalid_argument("Boundary: dt must be positive");
    Boundary b;
    b.tabulated_ = true;
    b.grid_t0_ = t0;
    b.grid_dt_ = dt;
    b.grid_values_ = std::move(values);
    return b;
  }

  bool tabulated() const { return tabulated_; }
  double grid_t0() const { return grid_t0_; }
  double grid_dt() const { return grid_dt_; }

  double value(double t) const {
    if (!tabulated_) return value_(t);
    const double x = (t - grid_t0_) / grid_dt_;
    const auto n = static_cast<std::ptrdiff_t>(grid_values_.size()) - 1;
    if (x <= 0) return grid_values_.front();
    if (x >= static_cast<double>(n)) return grid_values_.back();
    auto j = static_cast<std::size_t>(x);
    double w = x - static_cast<double>(j);
    return (1.0 - w) * grid_values_[j] + w * grid_values_[j + 1];
  }

  double deriv(double t) const {
    if (!tabulated_) return deriv_(t);
    const auto n = grid_values_.size() - 1;
    double x = (t - grid_t0_) / grid_dt_;
    auto j = static_cast<std::size_t>(std::min(std::max(x, 0.0), static_cast<double>(n)) + 0.5);
    return deriv_at_index(j);
  }

  /// Sample S and S' on the Volterra grid t0 + k dt, k = 0..n. A tabulated
  /// boundary must be aligned with that grid.
  void sample(double t0, double dt, std::size_t n, std::vector<double>& s,
              std::vector<double>& sp) const {
    s.resize(n + 1);
    sp.resize(n + 1);
    if (tabulated_) {
      if (std::abs(grid_t0_ - t0) > 1e-12 * std::max(1.0, std::abs(t0)) ||
          std::abs(grid_dt_ - dt) > 1e-12 * dt || grid_values_.size() < n + 1)
        throw std::invalid_argument("Boundary: tabulated grid not aligned with solver grid");
      for (std::size_t k = 0; k <= n; ++k) {
        s[k] = grid_values_[k];
        sp[k] = deriv_at_index(k);
      }
    } else {
      for (std::size_t k = 0; k <= n; ++k) {
        double t = t0 + static_cast<double>(k) * dt;
        s[k] = value_(t);
        sp[k] = deriv_(t);
      }
    }
  }

 private:
  double deriv_at_index(std::size_t j) const {
    const auto n = grid_values_.size() - 1;
    if (j == 0) return (grid_values_[1] - grid_values_[0]) / grid_dt_;
    if (j >= n) return (grid_values_[n] - grid_values_[n - 1]) / grid_dt_;
    return (grid_values_[j + 1] - grid_values_[j - 1]) / (2.0 * grid_dt_);
  }

  bool tabulated_ = false;
  std::function<double(double)> value_, deriv_;
  double grid_t0_ = 0.0, grid_dt_ = 0.0;
  std::vector<double> grid_values_;
};

/// Discretized first-passage-time density and its cumulative distribution on
/// the grid t_1..t_N.
struct FptdResult {
  std::vector<double> t;        // t_1..t_N
  std::vector<double> density;  // clamped at zero
  std::vector<double> cdf;
  double terminal_risk = 0.0;
  int clamp_count = 0;
  bool cdf_tolerance_exceeded = false;  // set when G > 1 + 1e-3
};

constexpr double kFptdCdfSlack = 1e-3;

/// Volterra kernel Psi(S(t), t | y, s). The state term is centered at the
/// conditioning time s, which keeps the kernel continuous (with limit zero)
/// as s -> t along the boundary; the singularity guard below only fires when
/// the covariance-factor denominator degenerates.
inline double psi(const OUProcess& p, const Boundary& b, double t, double s, double y) {
  if (!(s >= p.t0 && s < t)) throw std::domain_error("psi: requires t0 <= s < t");
  const CovFactors ft = cov_factors(p, t);
  const CovFactors fs = cov_factors(p, s);
  const double den = ft.h1 * fs.h2 - ft.h2 * fs.h1;
  if (std::abs(den) < 1e-14) throw std::runtime_error("psi: singular proximity, h1 h2 denominator ~ 0");

  const double mt = mean(p, t), ms = mean(p, s);
  const double r1 = (ft.h1_deriv * fs.h2 - ft.h2_deriv * fs.h1) / den;
  const double r2 = (ft.h2_deriv * ft.h1 - ft.h2 * ft.h1_deriv) / den;
  const double bracket = 0.5 * (b.deriv(t) - mean_deriv(p, t)) -
                         0.5 * (b.value(t) - mt) * r1 - 0.5 * (y - ms) * r2;

  const TransitionMoments tm = transition_moments(p, s, y, t);
  const double z = b.value(t) - tm.mean;
  const double dens = std::exp(-0.5 * z * z / tm.var) / std::sqrt(2.0 * kPi * tm.var);
  return bracket * dens;
}

namespace detail {

// Weight table of the repeated Simpson iteration, applied verbatim per row
// index k (rows 2 and 3 only carry the entries whose ranges are nonempty).
inline double volterra_weight(std::size_t k, std::size_t j) {
  if (k % 2 == 1) {
    if (j == k - 1 || j == k - 2) return 9.0 / 8.0;
    if (j == k - 3) return 17.0 / 24.0;
  }
  return (j % 2 == 1) ? 4.0 / 3.0 : 2.0 / 3.0;
}

}  // namespace detail

/// First-passage-time density of the OUP across the boundary via the
/// second-kind Volterra equation and the repeated-Simpson iteration.
inline FptdResult solve_volterra(const OUProcess& p, const Boundary& b, double dt,
                                 double t_end) {
  if (!(dt > 0)) throw std::invalid_argument("solve_volterra: dt must be positive");
  const auto n = static_cast<std::size_t>(std::llround((t_end - p.t0) / dt));
  if (n < 2) throw std::invalid_argument("solve_volterra: need (t_end - t0)/dt >= 2");

  std::vector<double> s(n + 1), sp(n + 1);
  b.sample(p.t0, dt, n, s, sp);
  if (!(s[0] > p.y0))
    throw std::domain_error("solve_volterra: boundary must start above y0");

  const double k0 = p.kappa, s2 = p.sigma * p.sigma;

  std::vector<double> m(n + 1), mp(n + 1), sm(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = p.t0 + static_cast<double>(k) * dt;
    m[k] = mean(p, t);
    mp[k] = k0 * (p.mean_level(t) - m[k]);
    sm[k] = s[k] - m[k];
  }

  // Lag-indexed kernel ingredients. With W = h1' h2 - h1 h2' = sigma^2 the
  // covariance-factor ratios collapse to hyperbolic functions of kappa*lag*dt.
  std::vector<double> decay(n + 1), cothf(n + 1), sinhf(n + 1), inv2v(n + 1), nrm(n + 1);
  for (std::size_t l = 1; l <= n; ++l) {
    const double kd = k0 * static_cast<double>(l) * dt;
    const double sh = std::sinh(kd);
    if (s2 * sh / k0 < 1e-14)
      throw std::runtime_error("solve_volterra: singular proximity at lag grid");
    decay[l] = std::exp(-kd);
    cothf[l] = 0.5 * k0 * std::cosh(kd) / sh;
    sinhf[l] = 0.5 * k0 / sh;
    const double v = s2 / (2.0 * k0) * (-std::expm1(-2.0 * kd));
    inv2v[l] = 0.5 / v;
    nrm[l] = 1.0 / std::sqrt(2.0 * kPi * v);
  }

  auto kernel = [&](std::size_t k, std::size_t j) {
    // Psi(t_k | t_j) with y = S(t_j) for j >= 1 and y = y0 at j = 0 (where the
    // state term vanishes because m(t0) = y0).
    const std::size_t l = k - j;
    const double dy = (j == 0) ? 0.0 : sm[j];
    const double bracket = 0.5 * (sp[k] - mp[k]) - sm[k] * cothf[l] + dy * sinhf[l];
    const double z = sm[k] - decay[l] * dy;
    return bracket * nrm[l] * std::exp(-z * z * inv2v[l]);
  };

  std::vector<double> g(n + 1, 0.0);
  g[1] = -2.0 * kernel(1, 0);
  for (std::size_t k = 2; k <= n; ++k) {
    double sum = 0.0;
    for (std::size_t j = 1; j < k; ++j)
      sum += detail::volterra_weight(k, j) * g[j] * kernel(k, j);
    g[k] = -2.0 * kernel(k, 0) + 2.0 * dt * sum;
  }

  FptdResult r;
  r.t.resize(n);
  r.density.resize(n);
  r.cdf.resize(n);
  for (std::size_t k = 1; k <= n; ++k) {
    r.t[k - 1] = p.t0 + static_cast<double>(k) * dt;
    if (g[k] < 0.0) {
      ++r.clamp_count;
      r.density[k - 1] = 0.0;
    } else {
      r.density[k - 1] = g[k];
    }
  }
  r.cdf[0] = 0.5 * dt * r.density[0];  // g(t0) := 0
  for (std::size_t k = 1; k < n; ++k)
    r.cdf[k] = r.cdf[k - 1] + 0.5 * dt * (r.density[k - 1] + r.density[k]);
  r.terminal_risk = r.cdf.back();
  for (double gv : r.cdf)
    if (gv > 1.0 + kFptdCdfSlack) r.cdf_tolerance_exceeded = true;
  return r;
}

struct RiskLevel {
  double risk;
  bool feasible;
};

/// Terminal risk G(T_CC) and the feasibility branch of the joint-constraint
/// check: feasible iff the first-passage probability stays within theta.
inline RiskLevel risk_level(const OUProcess& p, const Boundary& b, double dt, double t_end,
                            double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::domain_error("risk_level: theta outside (0,1)");
  FptdResult r = solve_volterra(p, b, dt, t_end);
  return {r.terminal_risk, r.terminal_risk <= theta};
}

/// Plain Monte Carlo estimate of the first-passage risk with discrete
/// monitoring on the dt-grid (known to under-estimate the continuous-time risk
/// for coarse dt). Paths stream one at a time, each from its own RNG stream.
inline double mc_first_passage_risk(const OUProcess& p, const Boundary& b, double dt,
                                    double t_end, std::size_t n_paths, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(std::llround((t_end - p.t0) / dt));
  if (n < 1 || n_paths < 1) throw std::domain_error("mc_first_passage_risk: empty grid or paths");

  std::vector<double> m(n + 1), s(n + 1), sp(n + 1);
  b.sample(p.t0, dt, n, s, sp);
  for (std::size_t k = 0; k <= n; ++k) m[k] = mean(p, p.t0 + static_cast<double>(k) * dt);

  const double decay = std::exp(-p.kappa * dt);
  const double sd = std::sqrt(p.sigma * p.sigma / (2.0 * p.kappa) *
                              (-std::expm1(-2.0 * p.kappa * dt)));

  std::size_t hits = 0;
  for (std::size_t i = 0; i < n_paths; ++i) {
    Rng rng(seed, i);
    double y = p.y0;
    for (std::size_t k = 1; k <= n; ++k) {
      y = m[k] + decay * (y - m[k - 1]) + sd * rng.next_normal();
      if (y > s[k]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(n_paths);
}

}  // namespace ccflow
