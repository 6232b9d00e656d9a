#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ccflow/demand.hpp"

using namespace ccflow;

namespace {

// OUP driving the gas-to-power experiments; also the first-passage test case.
OUProcess gas_process() {
  return OUProcess(0.0, 0.8, 1.0 / 3600.0, 0.003,
                   MeanLevel::sinusoidal(0.7, 0.3, kPi / 7200.0));
}

OUProcess constant_process(double mu_bar = 1.4) {
  return OUProcess(0.0, 0.8, 0.5, 0.25, MeanLevel::constant(mu_bar));
}

double bisect_norm_inv(double p) {
  double lo = -12.0, hi = 12.0;
  while (hi - lo > 1e-13) {
    double mid = 0.5 * (lo + hi);
    (norm_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("construction rejects non-positive kappa and sigma") {
  CHECK_THROWS(OUProcess(0, 1, 0.0, 1.0, MeanLevel::constant(1)));
  CHECK_THROWS(OUProcess(0, 1, -1.0, 1.0, MeanLevel::constant(1)));
  CHECK_THROWS(OUProcess(0, 1, 1.0, 0.0, MeanLevel::constant(1)));
}

TEST_CASE("tabulated mean level validates ordering and clamps") {
  CHECK_THROWS(MeanLevel::tabulated({{0.0, 1.0}, {0.0, 2.0}}));
  auto m = MeanLevel::tabulated({{0.0, 1.0}, {1.0, 3.0}, {2.0, 2.0}});
  CHECK(m(-5.0) == 1.0);
  CHECK(m(5.0) == 2.0);
  CHECK(m(0.5) == Catch::Approx(2.0));
  CHECK(m(1.5) == Catch::Approx(2.5));
}

TEST_CASE("mean at t0 returns y0 and rejects t < t0") {
  auto p = gas_process();
  CHECK(mean(p, p.t0) == p.y0);
  CHECK_THROWS(mean(p, -1.0));
}

TEST_CASE("constant mean level closed form") {
  auto p = constant_process(1.4);
  for (double t : {0.1, 0.7, 2.0, 9.0}) {
    double expected = 1.4 + (p.y0 - 1.4) * std::exp(-p.kappa * t);
    CHECK(mean(p, t) == Catch::Approx(expected).margin(1e-14));
    CHECK(mean(p, t) == Catch::Approx(mean_quadrature(p, t)).margin(1e-12));
  }
}

TEST_CASE("sinusoidal closed-form mean agrees with quadrature on the gas process") {
  auto p = gas_process();
  for (double t : {60.0, 600.0, 3600.0, 7200.0, 14400.0}) {
    CHECK(mean(p, t) == Catch::Approx(mean_quadrature(p, t)).margin(1e-10));
  }
}

TEST_CASE("tabulated mean level evaluates through quadrature") {
  auto mu = MeanLevel::tabulated({{0.0, 0.5}, {1.0, 1.5}, {3.0, 0.75}});
  OUProcess p(0.0, 1.0, 2.0, 0.1, mu);
  // piecewise-linear mu admits an exact antiderivative per segment
  auto exact_segment = [&](double a, double b, double t) {
    // kappa int_a^b e^{-kappa(t-s)} (c0 + c1 s) ds with mu linear on [a,b]
    double c1 = (mu(b) - mu(a)) / (b - a);
    double c0 = mu(a) - c1 * a;
    auto F = [&](double s) {
      return std::exp(-p.kappa * (t - s)) * (c0 + c1 * s - c1 / p.kappa);
    };
    return F(b) - F(a);
  };
  double t = 2.5;
  double exact = p.y0 * std::exp(-p.kappa * t) + exact_segment(0.0, 1.0, t) +
                 exact_segment(1.0, 2.5, t);
  CHECK(mean(p, t) == Catch::Approx(exact).margin(1e-10));
}

TEST_CASE("variance endpoints and integral form") {
  auto p = gas_process();
  CHECK(variance(p, 0.0) == 0.0);
  double cap = p.sigma * p.sigma / (2.0 * p.kappa);
  CHECK(variance(p, 1e9) == Catch::Approx(cap).epsilon(1e-12));
  AdaptiveSimpson quad(1e-14);
  for (double t : {30.0, 900.0, 14400.0}) {
    double integral = p.sigma * p.sigma *
                      quad.integrate([&](double s) { return std::exp(-2.0 * p.kappa * (t - s)); },
                                     p.t0, t);
    CHECK(variance(p, t) == Catch::Approx(integral).margin(1e-12));
  }
  CHECK_THROWS(variance(p, -0.5));
}

TEST_CASE("variance is nondecreasing and bounded by sigma^2/(2 kappa)") {
  auto p = gas_process();
  double cap = p.sigma * p.sigma / (2.0 * p.kappa);
  double prev = 0.0;
  for (int k = 1; k <= 200; ++k) {
    double v = variance(p, 72.0 * k);
    CHECK(v >= prev);
    CHECK(v <= cap * (1.0 + 1e-12));
    prev = v;
  }
}

TEST_CASE("covariance diagonal, deterministic start, swapped arguments") {
  auto p = gas_process();
  CHECK(covariance(p, 500.0, 500.0) == Catch::Approx(variance(p, 500.0)).epsilon(1e-13));
  CHECK(covariance(p, 0.0, 900.0) == Catch::Approx(0.0).margin(1e-18));
  CHECK(covariance(p, 900.0, 120.0) == Catch::Approx(covariance(p, 120.0, 900.0)));
  CHECK_THROWS(covariance(p, -1.0, 10.0));
}

TEST_CASE("covariance factorizes as h1(s) h2(t) and satisfies Cauchy-Schwarz") {
  auto p = gas_process();
  Rng rng(20240811);
  for (int i = 0; i < 200; ++i) {
    double s = 14400.0 * rng.next_uniform();
    double t = s + (14400.0 - s) * rng.next_uniform();
    double c = covariance(p, s, t);
    double f = cov_factors(p, s).h1 * cov_factors(p, t).h2;
    CHECK(c == Catch::Approx(f).epsilon(1e-12));
    CHECK(c <= std::sqrt(variance(p, s) * variance(p, t)) * (1.0 + 1e-12));
  }
}

TEST_CASE("covariance factors at t0 and derivative consistency") {
  auto p = gas_process();
  auto f0 = cov_factors(p, 0.0);
  CHECK(f0.h1 == Catch::Approx(0.0).margin(1e-15));
  CHECK(f0.h2 == Catch::Approx(p.sigma * p.sigma / (2.0 * p.kappa)).epsilon(1e-14));

  for (double t : {10.0, 450.0, 3600.0, 12000.0}) {
    double eps = 1e-6 * std::max(1.0, t);
    auto fm = cov_factors(p, t - eps);
    auto fp = cov_factors(p, t + eps);
    auto f = cov_factors(p, t);
    CHECK(f.h1_deriv == Catch::Approx((fp.h1 - fm.h1) / (2 * eps)).epsilon(1e-6));
    CHECK(f.h2_deriv == Catch::Approx((fp.h2 - fm.h2) / (2 * eps)).epsilon(1e-6));
  }
}

TEST_CASE("h1 nondecreasing, h2 strictly decreasing") {
  auto p = gas_process();
  double h1_prev = cov_factors(p, 0.0).h1;
  double h2_prev = cov_factors(p, 0.0).h2;
  for (int k = 1; k <= 100; ++k) {
    auto f = cov_factors(p, 144.0 * k);
    CHECK(f.h1 >= h1_prev);
    CHECK(f.h2 < h2_prev);
    h1_prev = f.h1;
    h2_prev = f.h2;
  }
}

TEST_CASE("transition moments: short-lag limit, tower property, Gauss-Markov form") {
  auto p = gas_process();
  double s = 1800.0, y = 0.85;

  auto tm = transition_moments(p, s, y, s + 1e-7);
  CHECK(tm.mean == Catch::Approx(y).margin(1e-9));
  CHECK(tm.var == Catch::Approx(0.0).margin(1e-12));

  double t = 5400.0;
  auto tower = transition_moments(p, s, mean(p, s), t);
  CHECK(tower.mean == Catch::Approx(mean(p, t)).epsilon(1e-12));

  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    double ss = 14000.0 * rng.next_uniform();
    double tt = ss + 10.0 + (14400.0 - ss - 10.0) * rng.next_uniform();
    double yy = 0.5 + rng.next_uniform();
    auto direct = transition_moments(p, ss, yy, tt);
    auto fs = cov_factors(p, ss);
    auto ft = cov_factors(p, tt);
    double gm_mean = mean(p, tt) + ft.h2 / fs.h2 * (yy - mean(p, ss));
    double gm_var = ft.h2 * (ft.h1 * fs.h2 - fs.h1 * ft.h2) / fs.h2;
    CHECK(direct.mean == Catch::Approx(gm_mean).margin(1e-10));
    CHECK(direct.var == Catch::Approx(gm_var).margin(1e-10 * std::max(1.0, gm_var)));
  }
  CHECK_THROWS(transition_moments(p, 10.0, 0.8, 10.0));
}

TEST_CASE("normal quantile: median, reference value, bisection oracle") {
  auto p = gas_process();
  double t = 7200.0;
  CHECK(quantile(p, t, 0.5) == Catch::Approx(mean(p, t)).margin(1e-12));
  CHECK(norm_inv(0.95) == Catch::Approx(1.6449).margin(5e-5));
  for (double q : {0.01, 0.05, 0.5, 0.95, 0.999}) {
    CHECK(norm_inv(q) == Catch::Approx(bisect_norm_inv(q)).margin(1e-12));
  }
  CHECK_THROWS(quantile(p, t, 0.0));
  CHECK_THROWS(quantile(p, t, 1.0));
  CHECK(quantile(p, p.t0, 0.25) == p.y0);
}

TEST_CASE("quantile scale flag reproduces the variance-scaled formula") {
  auto p = gas_process();
  double t = 7200.0;
  p.quantile_scale = QuantileScale::Variance;
  CHECK(quantile(p, t, 0.05) ==
        Catch::Approx(mean(p, t) + variance(p, t) * norm_inv(0.95)).margin(1e-14));
  p.quantile_scale = QuantileScale::StdDev;
  CHECK(quantile(p, t, 0.05) ==
        Catch::Approx(mean(p, t) + std::sqrt(variance(p, t)) * norm_inv(0.95)).margin(1e-14));
}

TEST_CASE("quantile monotone in theta with reflection symmetry") {
  auto p = gas_process();
  double t = 3600.0;
  double prev = quantile(p, t, 0.001);
  for (double theta : {0.01, 0.05, 0.2, 0.5, 0.8, 0.99}) {
    double q = quantile(p, t, theta);
    CHECK(q < prev);
    prev = q;
    CHECK(quantile(p, t, theta) + quantile(p, t, 1.0 - theta) ==
          Catch::Approx(2.0 * mean(p, t)).margin(1e-12));
  }
}

TEST_CASE("quantile matches Monte Carlo tail probability") {
  auto p = gas_process();
  double t = 7200.0, theta = 0.1;
  double q = quantile(p, t, theta);
  double m = mean(p, t), sd = std::sqrt(variance(p, t));
  const std::size_t n = 1000000;
  Rng rng(99, 3);
  std::size_t below = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (m + sd * rng.next_normal() <= q) ++below;
  double frac = static_cast<double>(below) / n;
  double se = std::sqrt(theta * (1.0 - theta) / n);
  CHECK(std::abs(frac - (1.0 - theta)) <= 3.0 * se);
}

TEST_CASE("sample_paths rejects bad grids") {
  auto p = gas_process();
  CHECK_THROWS(sample_paths(p, {0.0, 10.0, 10.0}, 2, 1));
  CHECK_THROWS(sample_paths(p, {5.0, 10.0}, 2, 1));
}

TEST_CASE("vanishing noise collapses paths onto the mean") {
  OUProcess p(0.0, 0.8, 1.0 / 3600.0, 1e-13, MeanLevel::sinusoidal(0.7, 0.3, kPi / 7200.0));
  std::vector<double> grid;
  for (int k = 0; k <= 16; ++k) grid.push_back(900.0 * k);
  auto paths = sample_paths(p, grid, 4, 17);
  for (std::size_t i = 0; i < paths.n_paths(); ++i)
    for (std::size_t k = 0; k < grid.size(); ++k)
      CHECK(paths.at(i, k) == Catch::Approx(mean(p, grid[k])).margin(1e-9));
}

TEST_CASE("sampled moments match the closed forms") {
  auto p = gas_process();
  std::vector<double> grid;
  for (int k = 0; k <= 16; ++k) grid.push_back(900.0 * k);
  const std::size_t n = 100000;
  auto paths = sample_paths(p, grid, n, 4242);

  for (std::size_t k = 4; k < grid.size(); k += 4) {
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) sum += paths.at(i, k);
    double mhat = sum / n;
    double band = 4.0 * std::sqrt(variance(p, grid[k]) / n);
    CHECK(std::abs(mhat - mean(p, grid[k])) <= band);
  }

  std::size_t last = grid.size() - 1;
  double sum = 0, sq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double y = paths.at(i, last);
    sum += y;
    sq += y * y;
  }
  double mhat = sum / n;
  double vhat = sq / n - mhat * mhat;
  CHECK(std::abs(vhat - variance(p, grid.back())) <= 0.05 * variance(p, grid.back()));
}

TEST_CASE("sub-sampling a fine grid matches coarse-grid sampling in law") {
  auto p = gas_process();
  std::vector<double> coarse, fine;
  for (int k = 0; k <= 8; ++k) coarse.push_back(1800.0 * k);
  for (int k = 0; k <= 64; ++k) fine.push_back(225.0 * k);
  const std::size_t n = 40000;
  auto pc = sample_paths(p, coarse, n, 1);
  auto pf = sample_paths(p, fine, n, 2);

  for (std::size_t kc : {4u, 8u}) {
    std::size_t kf = kc * 8;
    double sc = 0, sf = 0, qc = 0, qf = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sc += pc.at(i, kc);
      sf += pf.at(i, kf);
      qc += pc.at(i, kc) * pc.at(i, kc);
      qf += pf.at(i, kf) * pf.at(i, kf);
    }
    double v = variance(p, coarse[kc]);
    CHECK(std::abs(sc / n - sf / n) <= 5.0 * std::sqrt(2.0 * v / n));
    double vc = qc / n - (sc / n) * (sc / n);
    double vf = qf / n - (sf / n) * (sf / n);
    CHECK(std::abs(vc - vf) <= 5.0 * v * std::sqrt(2.0 / n) * 2.0);
  }
}
