// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "uba/bounds.hpp"
#include "uba/error.hpp"

using namespace uba;

namespace
{

BoundInputs inputs(std::int64_t n, double phi, std::int64_t t, double lam_lo = 1.0,
                   double lam_hi = 1.0)
{
  BoundInputs in;
  in.n = n;
  in.phi = phi;
  in.t_rel = t;
  in.lambda_lo = lam_lo;
  in.lambda_hi = lam_hi;
  in.spectrum = {lam_lo};
  return in;
}

// Direct product, no logs.
double raw_product(const std::vector<double> &etas, std::size_t upto, double lam)
{
  double p = 1.0;
  for (std::size_t i = 0; i < upto; ++i)
  {
    p *= (1.0 - etas[i] * lam) * (1.0 - etas[i] * lam);
  }
  return p;
}

}  // namespace

TEST_CASE("tau closed form and sign")
{
  const auto in = inputs(100, 4.0, 1);
  const double x = 1.0 + std::cos(std::numbers::pi / 200.0);
  CHECK(tau(in, 1.0) == doctest::Approx(4.0 * x * 100.0 / (2.0 * std::numbers::pi)));
  CHECK(tau(in, 1.0) == doctest::Approx(127.32).epsilon(1e-4));
  CHECK(tau(inputs(100, 1.0, 1), 1.0) < 0.0);
  CHECK(tau(inputs(100, 1.0, 1), 1.0) == doctest::Approx(-2.0 * tau(in, 1.0)));
}

TEST_CASE("exact product")
{
  const std::vector<double> e(10, 0.05);
  CHECK(exact_product(e, 1.0) == doctest::Approx(20.0 * std::log(0.95)));
  CHECK(exact_product(std::vector<double>{}, 3.0) == 0.0);
  CHECK(exact_product(std::vector<double>{0.5}, 2.0) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("phase rates are the descending UBA phase")
{
  auto in = inputs(30, 3.0, 1);
  in.eta_lo = 0.1;
  in.eta_hi = 0.8;
  const auto r = phase_rates(in);
  const auto tr = trace(make_uba(30, 3.0, 0.8, 0.1)).rates;
  REQUIRE(r.size() == tr.size());
  for (std::size_t i = 0; i < r.size(); ++i)
  {
    CHECK(r[i] == doctest::Approx(tr[i]).epsilon(1e-14));
  }
}

TEST_CASE("product bound dominates the product")
{
  for (double phi : {0.5, 1.0, 3.0, 5.0, 10.0})
  {
    for (std::int64_t n : {5, 20, 60})
    {
      auto in = inputs(n, phi, 1, 0.1, 1.0);
      const auto etas = phase_rates(in);
      for (double lam : {0.1, 0.37, 0.8, 1.0})
      {
        for (std::int64_t t = 1; t <= n; ++t)
        {
          in.t_rel = t;
          CAPTURE(phi);
          CAPTURE(n);
          CAPTURE(lam);
          CAPTURE(t);
          CHECK(raw_product(etas, static_cast<std::size_t>(t), lam) <=
                lemma1_bound(in, lam) + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("bound is one at the first step for phi > 2 with eta_lo = 0")
{
  CHECK(log_lemma1_bound(inputs(20, 4.0, 1), 1.0) == doctest::Approx(0.0));
  CHECK(lemma1_bound(inputs(20, 4.0, 20), 1.0) < 1.0);
}

TEST_CASE("exponent mode only matters below phi = 2")
{
  auto in = inputs(40, 1.0, 20, 0.5, 2.0);
  in.eta_hi = 0.5;
  CHECK(log_lemma1_bound(in, 2.0, ExponentLambda::AsPrinted) <
        log_lemma1_bound(in, 2.0, ExponentLambda::Lower));
  in.phi = 4.0;
  CHECK(log_lemma1_bound(in, 2.0, ExponentLambda::AsPrinted) ==
        log_lemma1_bound(in, 2.0, ExponentLambda::Lower));
}

TEST_CASE("phi = 2 is rejected, values next to it are fine")
{
  CHECK_THROWS_AS(lemma1_bound(inputs(20, 2.0, 3), 1.0), InvalidSpec);
  CHECK_THROWS_AS(theorem1_bound(inputs(20, 2.0 + 1e-8, 3)), InvalidSpec);
  for (double phi : {1.9, 2.1})
  {
    const double b = lemma1_bound(inputs(20, phi, 10), 1.0);
    CHECK(std::isfinite(b));
    CHECK(b > 0.0);
  }
}

TEST_CASE("input validation")
{
  auto in = inputs(10, 3.0, 11);
  CHECK_FALSE(in.check().empty());
  CHECK_THROWS_AS(tau(in, 1.0), InvalidSpec);
  in.t_rel = 5;
  in.spectrum = {5.0};
  CHECK(in.check().size() == 1);
  CHECK(in.check()[0].path == "/spectrum/0");
}

TEST_CASE("gap bound parts")
{
  auto in = inputs(50, 3.0, 25, 1.0, 4.0);
  in.eta_hi = 0.25;
  in.spectrum = {1.0, 2.0, 4.0};
  CHECK(theorem1_bound(in).bias == 0.0);
  CHECK(theorem1_bound(in).variance == 0.0);

  in.init_dist_sq = 1.0;
  in.sigma = 0.1;
  const auto g = theorem1_bound(in);
  CHECK(g.bias > 0.0);
  CHECK(g.variance > 0.0);

  // Bias: the product bound at lambda_lo, scaled by lambda_hi * |s|^2.
  CHECK(g.bias == doctest::Approx(lemma1_bound(in, 1.0) * 4.0));

  // Variance term is quadratic in sigma.
  in.sigma = 0.2;
  CHECK(theorem1_bound(in).variance == doctest::Approx(4.0 * g.variance));
}

TEST_CASE("sweep covers every cell in order")
{
  SweepConfig cfg;
  cfg.phis = {1.0, 3.0};
  cfg.lengths = {4, 6};
  cfg.lambda_points = 3;
  const auto rows = bound_sweep(cfg);
  CHECK(rows.size() == 2 * 3 * (4 + 6));
  CHECK(rows.front().phi == 1.0);
  CHECK(rows.front().n == 4);
  CHECK(rows.front().lambda == doctest::Approx(0.1));
  CHECK(rows.back().phi == 3.0);
  CHECK(rows.back().lambda == doctest::Approx(1.0));
  CHECK(rows.back().t_rel == 6);
  for (const auto &r : rows)
  {
    CHECK(r.margin == doctest::Approx(r.log_bound - r.log_exact));
    CHECK(r.margin >= 0.0);
  }
  cfg.phis = {2.0};
  CHECK_THROWS_AS(bound_sweep(cfg), InvalidSpec);
}
