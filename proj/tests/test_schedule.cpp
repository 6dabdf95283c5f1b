#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "sbf/rng.hpp"
#include "sbf/schedule.hpp"

using namespace sbf;

namespace {

// Independent oracle: trapezoid quadrature of g^2(tau) = c k^{2 tau}.
double sigma_sq_quadrature(double t, const ScheduleParams& s, int points) {
  const double h = t / points;
  double acc = 0.0;
  for (int i = 0; i <= points; ++i) {
    const double tau = h * i;
    const double g2 = s.c * std::exp(2.0 * std::log(s.k) * tau);
    acc += (i == 0 || i == points) ? 0.5 * g2 : g2;
  }
  return acc * h;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

TEST_CASE("schedule validation") {
  ScheduleParams s;
  CHECK_NOTHROW(s.validate());
  s.c = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = ScheduleParams{};
  s.k = 1.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = ScheduleParams{};
  s.t_eps = 0.3;  // >= 1/N for N = 4
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  const auto grid = ScheduleParams{}.grid_times();
  REQUIRE(grid.size() == 5);
  CHECK(grid[0] == doctest::Approx(0.03));
  CHECK(grid[4] == 1.0);
  for (size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
}

TEST_CASE("sigma_sq closed form") {
  ScheduleParams s;

  CHECK(sigma_sq(0.0, s) == 0.0);
  CHECK(sigma_sq(0.5, s) > sigma_sq(0.25, s));
  CHECK_THROWS_AS(sigma_sq(-0.01, s), std::domain_error);
  CHECK_THROWS_AS(sigma_sq(1.01, s), std::domain_error);

  // closed form vs quadrature of g^2 at the horizon and at interior times
  const double q1 = sigma_sq_quadrature(1.0, s, 1000000);
  CHECK(rel_err(sigma_sq(1.0, s), q1) < 1e-8);
  const double q05 = sigma_sq_quadrature(0.5, s, 1000000);
  CHECK(rel_err(sigma_sq(0.5, s), q05) < 1e-8);

  // and across random schedules
  Rng rng(7);
  for (int i = 0; i < 5; ++i) {
    ScheduleParams r;
    r.c = rng.uniform_in(0.05, 2.0);
    r.k = rng.uniform_in(1.2, 6.0);
    const double t = rng.uniform_in(0.1, 1.0);
    CHECK(rel_err(sigma_sq(t, r), sigma_sq_quadrature(t, r, 1000000)) < 1e-8);
  }
}

TEST_CASE("marginal coefficients at the boundaries") {
  ScheduleParams s;
  const BridgeCoefficients b0 = marginal_coeffs(0.0, s);
  CHECK(b0.w_x == 1.0);
  CHECK(b0.w_y == 0.0);
  CHECK(b0.sigma_x == 0.0);

  const BridgeCoefficients bT = marginal_coeffs(1.0, s);
  CHECK(bT.w_x == 0.0);
  CHECK(bT.w_y == 1.0);
  CHECK(bT.sigma_x == 0.0);
  CHECK(bT.sigma2_bar == 0.0);
}

TEST_CASE("marginal mid-time Monte-Carlo oracle") {
  // Brownian-bridge construction, independent of the coefficient formulas:
  //   x_t = x0 + W(s_t) - (s_t/s_T) (W(s_T) - (y - x0)),  s_t = sigma_t^2
  ScheduleParams s;
  const double t = 0.5;
  const double st = sigma_sq(t, s), sT = sigma_sq(1.0, s);

  Rng rng(42);
  const int n = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w_t = std::sqrt(st) * rng.normal();
    const double w_T = w_t + std::sqrt(sT - st) * rng.normal();
    const double x = w_t - (st / sT) * (w_T - 1.0);  // x0 = 0, y = 1
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;

  const BridgeCoefficients bc = marginal_coeffs(t, s);
  CHECK(bc.w_x + bc.w_y == doctest::Approx(1.0).epsilon(1e-12));
  const double sx2 = bc.sigma_x * bc.sigma_x;
  CHECK(sx2 == doctest::Approx(bc.sigma2_bar * bc.sigma2 / (bc.sigma2 + bc.sigma2_bar))
                   .epsilon(1e-12));
  CHECK(std::abs(mean - bc.w_y) < 3.0 * bc.sigma_x / std::sqrt((double)n));
  CHECK(std::abs(var - sx2) < 0.05 * sx2);
}

TEST_CASE("transition parameters") {
  ScheduleParams s;

  SUBCASE("final forward transition collapses to y") {
    const TransitionParams tp = transition_params(0.75, 1.0, s);
    CHECK(tp.coef_x == 0.0);
    CHECK(tp.coef_y == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tp.var == 0.0);
  }

  SUBCASE("degenerate limit is the identity") {
    const TransitionParams tp = transition_params(0.5, 0.5 + 1e-9, s);
    CHECK(tp.coef_x == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(tp.coef_y) < 1e-6);
    CHECK(tp.var < 1e-8);
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(transition_params(0.5, 0.5, s), std::invalid_argument);
    CHECK_THROWS_AS(transition_params(0.7, 0.3, s), std::invalid_argument);
    CHECK_THROWS_AS(transition_params(1.0, 1.0, s), std::invalid_argument);
  }
}

TEST_CASE("kernel identities over random schedules") {
  Rng rng(123);
  for (int draw = 0; draw < 100; ++draw) {
    ScheduleParams s;
    s.c = rng.uniform_in(0.05, 2.0);
    s.k = rng.uniform_in(1.2, 6.0);
    const double sT2 = sigma_sq(1.0, s);
    for (int i = 0; i < 200; ++i) {
      double a = rng.uniform_in(0.0, 1.0), b = rng.uniform_in(0.0, 1.0);
      if (a > b) std::swap(a, b);
      if (b - a < 1e-6) b = std::min(1.0, a + 1e-6);

      const BridgeCoefficients ca = marginal_coeffs(a, s);
      const BridgeCoefficients cb = marginal_coeffs(b, s);
      CHECK(std::abs(ca.w_x + ca.w_y - 1.0) < 1e-10);
      CHECK(std::abs(ca.sigma2 + ca.sigma2_bar - sT2) < 1e-10 * sT2);
      CHECK(ca.sigma_x * ca.sigma_x >= 0.0);

      if (ca.w_x > 0.0) {
        const TransitionParams tp = transition_params(a, b, s);
        CHECK(rel_err(tp.coef_x * ca.w_x, cb.w_x) < 1e-10);
        CHECK(std::abs(tp.coef_x * ca.w_y + tp.coef_y - cb.w_y) < 1e-10);
        const double lhs = tp.coef_x * tp.coef_x * ca.sigma_x * ca.sigma_x + tp.var;
        const double rhs = cb.sigma_x * cb.sigma_x;
        CHECK(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, rhs));
      }
    }
  }
}

TEST_CASE("sigma_x positivity profile") {
  ScheduleParams s;
  CHECK(marginal_coeffs(0.0, s).sigma_x == 0.0);
  CHECK(marginal_coeffs(1.0, s).sigma_x == 0.0);
  for (int i = 1; i < 1000; ++i) {
    const double t = i / 1000.0;
    CHECK(marginal_coeffs(t, s).sigma_x > 0.0);
  }
}
