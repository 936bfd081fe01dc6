// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "doctest.h"
#include "uba/error.hpp"
#include "uba/minmax.hpp"

using namespace uba;

namespace
{

// Chebyshev polynomial by the three-term recurrence.
double cheb_recurrence(int n, double x)
{
  double a = 1.0;
  double b = x;
  if (n == 0)
  {
    return a;
  }
  for (int k = 2; k <= n; ++k)
  {
    const double c = 2.0 * x * b - a;
    a = b;
    b = c;
  }
  return b;
}

double brute_worst(const std::vector<double> &etas, double lo, double hi, int points)
{
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i)
  {
    const double lam = lo + (hi - lo) * i / (points - 1.0);
    double s = 0.0;
    for (double e : etas)
    {
      s += 2.0 * std::log(std::abs(1.0 - e * lam));
    }
    best = std::max(best, s);
  }
  return best;
}

}  // namespace

TEST_CASE("one-step minimax value")
{
  const std::vector<double> etas{2.0 / 3.0};
  const auto w = worst_case_objective(etas, 1.0, 2.0);
  CHECK(w.log_objective == doctest::Approx(std::log(1.0 / 9.0)).epsilon(1e-12));
  CHECK(w.log_objective == doctest::Approx(-2.19722).epsilon(1e-5));
  CHECK(w.lambda == doctest::Approx(1.0));
}

TEST_CASE("zero steps give zero objective")
{
  const std::vector<double> etas{0.0, 0.0, 0.0};
  CHECK(worst_case_objective(etas, 0.5, 7.0).log_objective == 0.0);
  CHECK_THROWS_AS(worst_case_objective(std::vector<double>{}, 1.0, 2.0), InvalidSpec);
}

TEST_CASE("chebyshev objective agrees with the recurrence")
{
  CHECK(chebyshev_objective(1, 1.0, 2.0) == doctest::Approx(std::log(1.0 / 9.0)));
  CHECK(chebyshev_objective(2, 1.0, 3.0) == doctest::Approx(std::log(1.0 / 49.0)));
  CHECK(chebyshev_objective(0, 1.0, 3.0) == 0.0);
  CHECK(chebyshev_objective(3, 2.0, 2.0) == -std::numeric_limits<double>::infinity());
  for (int n = 1; n <= 16; ++n)
  {
    const double d = 11.0 / 9.0;
    const double c = cheb_recurrence(n, d);
    CHECK(chebyshev_objective(n, 1.0, 10.0) ==
          doctest::Approx(-2.0 * std::log(c)).epsilon(1e-13));
  }
  // Large n stays finite where cosh would overflow.
  const double big = chebyshev_objective(5000, 1.0, 1.0001);
  CHECK(std::isfinite(big));
  CHECK(big < 0.0);
}

TEST_CASE("chebyshev steps")
{
  const auto one = chebyshev_steps(1, 1.0, 2.0);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == doctest::Approx(2.0 / 3.0));

  const auto two = chebyshev_steps(2, 1.0, 3.0);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == doctest::Approx(1.0 / (2.0 - std::sqrt(2.0) / 2.0)).epsilon(1e-14));
  CHECK(two[1] == doctest::Approx(1.0 / (2.0 + std::sqrt(2.0) / 2.0)).epsilon(1e-14));
  CHECK(two[0] == doctest::Approx(0.773459).epsilon(1e-6));
  CHECK(two[1] == doctest::Approx(0.369398).epsilon(1e-6));

  CHECK(chebyshev_steps(3, 5.0, 5.0) == std::vector<double>(3, 0.2));
}

TEST_CASE("chebyshev steps attain the optimum and equioscillate")
{
  for (int n = 1; n <= 16; ++n)
  {
    const auto s = chebyshev_steps(n, 1.0, 10.0);
    const auto w = worst_case_objective(s, 1.0, 10.0);
    CHECK(w.log_objective == doctest::Approx(chebyshev_objective(n, 1.0, 10.0)).epsilon(1e-9));
    const double lo = log_contraction(s, 1.0);
    const double hi = log_contraction(s, 10.0);
    CHECK(std::abs(lo - hi) <= 1e-8 * std::abs(lo));
    CHECK(brute_worst(s, 1.0, 10.0, 20001) <= w.log_objective + 1e-12);
  }
}

TEST_CASE("scaled UBA equals chebyshev")
{
  CHECK(scaled_uba_steps(1, 1.0, 2.0)[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  const auto a = scaled_uba_steps(8, 1.0, 10.0);
  const auto b = chebyshev_steps(8, 1.0, 10.0);
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    CHECK(std::abs(a[i] - b[i]) <= 1e-12);
  }
}

TEST_CASE("near-degenerate box approaches a scaled cosine")
{
  const double lo = 1.0;
  const double hi = 1.0 + 1e-6;
  const auto s = scaled_uba_steps(20, lo, hi);
  for (std::size_t t = 0; t < s.size(); ++t)
  {
    const double x = 1.0 + std::cos((2.0 * (t + 1) - 1.0) * std::numbers::pi / 40.0);
    const double cosine = (1.0 / lo - 1.0 / hi) * x / 2.0 + 1.0 / hi;
    CHECK(s[t] == doctest::Approx(cosine).epsilon(1e-10));
  }
}

TEST_CASE("worst case is permutation invariant")
{
  std::vector<double> etas{0.9, 0.1, 0.5, 0.33, 0.71};
  const double ref = worst_case_objective(etas, 1.0, 5.0).log_objective;
  std::sort(etas.begin(), etas.end());
  do
  {
    CHECK(worst_case_objective(etas, 1.0, 5.0).log_objective == doctest::Approx(ref).epsilon(1e-13));
  } while (std::next_permutation(etas.begin(), etas.end()));
}

TEST_CASE("exact annihilation is -inf")
{
  const std::vector<double> etas{0.5};
  CHECK(log_contraction(etas, 2.0) == -std::numeric_limits<double>::infinity());
  const auto w = worst_case_objective(etas, 2.0, 2.0);
  CHECK(w.log_objective == -std::numeric_limits<double>::infinity());
}

TEST_CASE("log contraction survives overflow of the raw product")
{
  const std::vector<double> etas(2000, 10.0);
  const double v = log_contraction(etas, 10.0);
  CHECK(v == doctest::Approx(2000.0 * 2.0 * std::log(99.0)));
}

TEST_CASE("solver: one step")
{
  const auto s = solve_minmax({1, 1.0, 2.0, 0.0, 1.0});
  CHECK(s.etas[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK(s.log_objective == doctest::Approx(std::log(1.0 / 9.0)).epsilon(1e-6));
  CHECK(s.etas_sorted_desc.size() == 1);
}

TEST_CASE("solver: degenerate box annihilates")
{
  const auto s = solve_minmax({2, 3.0, 3.0, 0.0, 1.0});
  CHECK(s.etas == std::vector<double>{1.0 / 3.0, 1.0 / 3.0});
  CHECK(s.log_objective == -std::numeric_limits<double>::infinity());
}

TEST_CASE("solver: four steps near the chebyshev optimum")
{
  SolverConfig cfg;
  cfg.restarts = 2;
  const auto s = solve_minmax({4, 1.0, 10.0, 0.0, 1.0}, cfg);
  const double opt = chebyshev_objective(4, 1.0, 10.0);
  CHECK(s.log_objective >= opt - 1e-9);
  CHECK(std::abs(s.log_objective - opt) <= 0.01 * std::abs(opt));
  CHECK(std::is_sorted(s.etas_sorted_desc.rbegin(), s.etas_sorted_desc.rend()));
  for (double e : s.etas)
  {
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
  }
  const auto w = worst_case_objective(s.etas, 1.0, 10.0);
  CHECK(w.log_objective == doctest::Approx(s.log_objective).epsilon(1e-9));
  CHECK(s.worst_lambda >= 1.0);
  CHECK(s.worst_lambda <= 10.0);
}

TEST_CASE("solver: tight box keeps every step feasible")
{
  SolverConfig cfg;
  cfg.restarts = 2;
  cfg.cycles = 3;
  cfg.outer_iterations = 200;
  const auto s = solve_minmax({6, 1.0, 10.0, 0.2, 0.4}, cfg);
  for (double e : s.etas)
  {
    CHECK(e >= 0.2);
    CHECK(e <= 0.4);
  }
}

TEST_CASE("solver is deterministic for a seed")
{
  SolverConfig cfg;
  cfg.restarts = 2;
  cfg.cycles = 2;
  cfg.outer_iterations = 100;
  cfg.seed = 42;
  const auto a = solve_minmax({3, 1.0, 4.0, 0.0, 1.0}, cfg);
  const auto b = solve_minmax({3, 1.0, 4.0, 0.0, 1.0}, cfg);
  CHECK(a.etas == b.etas);
  CHECK(a.log_objective == b.log_objective);
}

TEST_CASE("problem validation")
{
  CHECK(MinMaxProblem{4, 1.0, 10.0, 0.0, 1.0}.check().empty());
  CHECK_FALSE(MinMaxProblem{0, 1.0, 10.0, 0.0, 1.0}.check().empty());
  CHECK_FALSE(MinMaxProblem{4, 5.0, 1.0, 0.0, 1.0}.check().empty());
  CHECK_FALSE(MinMaxProblem{4, 1.0, 10.0, 1.0, 1.0}.check().empty());
  CHECK_THROWS_AS(solve_minmax({4, 0.0, 1.0, 0.0, 1.0}), InvalidSpec);
  SolverConfig bad;
  bad.restarts = 0;
  CHECK_FALSE(bad.check().empty());
}
