#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ccflow/demand.hpp"
#include "ccflow/math.hpp"

namespace ccflow {

/// Weights of the four cost components plus the deterministic-cost
/// coefficients (compressor lift and gas consumption).
struct CostWeights {
  double w_det = 0.0;
  double w_track = 1.0;
  double w_under = 0.0;
  double w_ex = 0.0;
  double c_compr = 1.0;
  double c_gas = 0.0001;

  void validate() const {
    if (w_det < 0 || w_track < 0 || w_under < 0 || w_ex < 0)
      throw std::invalid_argument("CostWeights: weights must be nonnegative");
  }
};

/// Doubly truncated normal: untruncated mean/variance plus truncation points
/// (either may be infinite).
struct TruncNormSpec {
  double mean;
  double variance;
  double a;
  double b;
};

/// Expected value of the truncated normal. Throws when the truncation window
/// carries no probability mass.
inline double truncnorm_mean(const TruncNormSpec& spec) {
  if (!(spec.variance > 0)) throw std::invalid_argument("truncnorm_mean: variance must be positive");
  if (!(spec.a < spec.b)) throw std::invalid_argument("truncnorm_mean: requires a < b");
  const double sd = std::sqrt(spec.variance);
  const double alpha = (spec.a - spec.mean) / sd;
  const double beta = (spec.b - spec.mean) / sd;

  double mass;
  if (std::isinf(alpha) && alpha < 0)
    mass = std::isinf(beta) ? 1.0 : norm_cdf(beta);
  else if (std::isinf(beta))
    mass = norm_sf(alpha);
  else if (alpha > 0)
    mass = norm_sf(alpha) - norm_sf(beta);
  else
    mass = norm_cdf(beta) - norm_cdf(alpha);
  if (!(mass > 1e-300)) throw std::runtime_error("truncnorm_mean: degenerate truncation window");

  const double pa = std::isinf(alpha) ? 0.0 : norm_pdf(alpha);
  const double pb = std::isinf(beta) ? 0.0 : norm_pdf(beta);
  return spec.mean + sd * (pa - pb) / mass;
}

/// E[(Y_t - supply)^2 | Y_t0], which collapses to (supply - m)^2 + v.
inline double tracking_cost(const OUProcess& p, double t, double supply) {
  const double m = mean(p, t);
  return (supply - m) * (supply - m) + variance(p, t);
}

/// E[(supply - Y_t)_- | Y_t0] <= 0, via the singly truncated normal with
/// a = supply, b = +inf. Enters the objective with weight -w_under.
inline double undersupply_cost(const OUProcess& p, double t, double supply) {
  if (t == p.t0) return std::min(supply - p.y0, 0.0);
  const double m = mean(p, t), v = variance(p, t);
  const double alpha = (supply - m) / std::sqrt(v);
  const double tail = norm_sf(alpha);
  if (!(tail > 1e-300)) return 0.0;
  const double cond = truncnorm_mean({m, v, supply, std::numeric_limits<double>::infinity()});
  return (supply - cond) * tail;
}

/// E[(supply - Y_t)_+ | Y_t0] >= 0, truncation b = supply, a = -inf.
inline double excess_revenue(const OUProcess& p, double t, double supply) {
  if (t == p.t0) return std::max(supply - p.y0, 0.0);
  const double m = mean(p, t), v = variance(p, t);
  const double alpha = (supply - m) / std::sqrt(v);
  const double head = norm_cdf(alpha);
  if (!(head > 1e-300)) return 0.0;
  const double cond = truncnorm_mean({m, v, -std::numeric_limits<double>::infinity(), supply});
  return (supply - cond) * head;
}

struct CostRate {
  double deterministic = 0.0;
  double tracking = 0.0;
  double undersupply = 0.0;  // signed as in the objective (nonnegative)
  double excess = 0.0;       // signed as in the objective (nonpositive)
  double total = 0.0;
};

/// Weighted running cost at one instant. The undersupply and excess terms
/// carry their objective signs, so total = sum of the components.
inline CostRate cost_rate(const OUProcess& p, const CostWeights& w, double t, double supply,
                          double u, double u_compr) {
  CostRate r;
  r.deterministic = w.w_det * (w.c_compr * std::max(u_compr, 0.0) + w.c_gas * u);
  r.tracking = w.w_track * tracking_cost(p, t, supply);
  r.undersupply = -w.w_under * undersupply_cost(p, t, supply);
  r.excess = -w.w_ex * excess_revenue(p, t, supply);
  r.total = r.deterministic + r.tracking + r.undersupply + r.excess;
  return r;
}

/// d(total)/d(supply) at fixed controls; used by the adjoint sweep.
inline double cost_rate_dsupply(const OUProcess& p, const CostWeights& w, double t,
                                double supply) {
  const double m = mean(p, t);
  double d = w.w_track * 2.0 * (supply - m);
  if (t > p.t0) {
    const double v = variance(p, t);
    const double alpha = (supply - m) / std::sqrt(v);
    // d/dS E[(S-Y)_-] = 1 - Phi(alpha), d/dS E[(S-Y)_+] = Phi(alpha)
    d += -w.w_under * norm_sf(alpha) - w.w_ex * norm_cdf(alpha);
  } else {
    d += -w.w_under * (supply < p.y0 ? 1.0 : 0.0) - w.w_ex * (supply > p.y0 ? 1.0 : 0.0);
  }
  return d;
}

}  // namespace ccflow
