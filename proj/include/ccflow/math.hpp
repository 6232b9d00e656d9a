#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ccflow {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

/// Standard normal density.
inline double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

/// Standard normal CDF via the complementary error function (accurate in both tails).
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

/// Upper tail P(X > x), avoids cancellation for large x.
inline double norm_sf(double x) { return 0.5 * std::erfc(x / kSqrt2); }

namespace detail {

// Acklam's rational approximation to the standard normal quantile (~1e-9),
// used as the seed for Newton refinement.
inline double norm_inv_seed(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double q = p - 0.5, r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace detail

/// Standard normal quantile, rational approximation polished by Newton steps
/// against the erfc-based CDF. Absolute error well below 1e-12 away from the
/// extreme tails.
inline double norm_inv(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("norm_inv: p outside (0,1)");
  double x = detail::norm_inv_seed(p);
  for (int it = 0; it < 2; ++it) {
    double e = norm_cdf(x) - p;
    double u = e / norm_pdf(x);
    x -= u / (1.0 + 0.5 * x * u);  // Halley step
  }
  return x;
}

/// Adaptive Simpson quadrature with absolute tolerance.
class AdaptiveSimpson {
 public:
  explicit AdaptiveSimpson(double abs_tol = 1e-12, int max_depth = 48)
      : tol_(abs_tol), max_depth_(max_depth) {
    if (!(tol_ > 0)) throw std::invalid_argument("quadrature tolerance must be positive");
  }

  template <class F>
  double integrate(F&& f, double a, double b) const {
    if (a == b) return 0.0;
    double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return recurse(f, a, b, fa, fb, fm, whole, tol_, max_depth_);
  }

 private:
  template <class F>
  static double recurse(F&& f, double a, double b, double fa, double fb, double fm,
                        double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
      return left + right + delta / 15.0;
    return recurse(f, a, m, fa, fm, flm, left, 0.5 * tol, depth - 1) +
           recurse(f, m, b, fm, fb, frm, right, 0.5 * tol, depth - 1);
  }

  double tol_;
  int max_depth_;
};

/// Composite trapezoid of sampled values on a uniform grid of spacing dt.
inline double trapezoid(const std::vector<double>& y, double dt) {
  if (y.size() < 2) return 0.0;
  double s = 0.5 * (y.front() + y.back());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
  return s * dt;
}

}  // namespace ccflow
