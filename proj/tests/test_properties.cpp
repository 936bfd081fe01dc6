// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "uba/bounds.hpp"
#include "uba/curve_fit.hpp"
#include "uba/io.hpp"
#include "uba/minmax.hpp"
#include "uba/quad_sim.hpp"
#include "uba/schedule.hpp"

using namespace uba;

namespace
{

double uniform(std::mt19937_64 &rng, double lo, double hi)
{
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::int64_t integer(std::mt19937_64 &rng, std::int64_t lo, std::int64_t hi)
{
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

// Random multi-phase UBA spec.
ScheduleSpec random_spec(std::mt19937_64 &rng)
{
  ScheduleSpec s;
  s.kind = ScheduleKind::UBA;
  s.eta_min = uniform(rng, 0.0, 0.05);
  const auto phases = integer(rng, 1, 4);
  s.total_steps = integer(rng, phases * 2, 400);
  s.plan.boundaries = {0};
  std::vector<std::int64_t> cuts;
  for (std::int64_t k = 1; k < phases; ++k)
  {
    cuts.push_back(integer(rng, 1, s.total_steps - 1));
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  for (auto c : cuts)
  {
    s.plan.boundaries.push_back(c);
  }
  s.plan.boundaries.push_back(s.total_steps);
  for (std::size_t k = 0; k + 1 < s.plan.boundaries.size(); ++k)
  {
    s.plan.phi.push_back(uniform(rng, 0.0, 20.0));
    s.plan.eta_max.push_back(uniform(rng, 0.1, 2.0));
  }
  s.plan.phase_shift = static_cast<int>(integer(rng, 0, 1));
  if (s.plan.phase_shift == 0 && integer(rng, 0, 1) == 1)
  {
    s.warmup_fraction = uniform(rng, 0.0, 0.3);
  }
  return s;
}

}  // namespace

TEST_CASE("no feasible step vector beats the chebyshev optimum")
{
  std::mt19937_64 rng(2024);
  for (int n = 1; n <= 8; ++n)
  {
    const double opt = chebyshev_objective(n, 1.0, 10.0);
    for (int k = 0; k < 125; ++k)
    {
      std::vector<double> etas(static_cast<std::size_t>(n));
      for (auto &e : etas)
      {
        e = uniform(rng, 0.0, 1.0);
      }
      CHECK(worst_case_objective(etas, 1.0, 10.0).log_objective >= opt - 1e-9);
    }
  }
}

TEST_CASE("perturbing the chebyshev steps never helps")
{
  std::mt19937_64 rng(7);
  for (int n : {3, 6, 12})
  {
    const auto base = chebyshev_steps(n, 1.0, 10.0);
    const double opt = chebyshev_objective(n, 1.0, 10.0);
    for (int k = 0; k < 50; ++k)
    {
      auto etas = base;
      for (auto &e : etas)
      {
        e *= 1.0 + uniform(rng, -1e-3, 1e-3);
      }
      CHECK(worst_case_objective(etas, 1.0, 10.0).log_objective >= opt - 1e-9);
    }
  }
}

TEST_CASE("worst case dominates every sampled eigenvalue")
{
  std::mt19937_64 rng(99);
  for (int k = 0; k < 200; ++k)
  {
    const auto n = integer(rng, 1, 10);
    const double lo = uniform(rng, 0.1, 2.0);
    const double hi = lo * uniform(rng, 1.0, 50.0);
    std::vector<double> etas(static_cast<std::size_t>(n));
    for (auto &e : etas)
    {
      e = uniform(rng, 0.0, 2.0 / lo);
    }
    const auto w = worst_case_objective(etas, lo, hi);
    CHECK(w.lambda >= lo);
    CHECK(w.lambda <= hi);
    for (int j = 0; j < 50; ++j)
    {
      CHECK(log_contraction(etas, uniform(rng, lo, hi)) <= w.log_objective + 1e-9);
    }
  }
}

TEST_CASE("objective is invariant under step order")
{
  std::mt19937_64 rng(5);
  for (int k = 0; k < 50; ++k)
  {
    std::vector<double> etas(static_cast<std::size_t>(integer(rng, 2, 12)));
    for (auto &e : etas)
    {
      e = uniform(rng, 0.0, 1.0);
    }
    const double a = worst_case_objective(etas, 1.0, 8.0).log_objective;
    std::shuffle(etas.begin(), etas.end(), rng);
    CHECK(worst_case_objective(etas, 1.0, 8.0).log_objective == doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("random specs: rates stay in range and round trip")
{
  std::mt19937_64 rng(31);
  for (int k = 0; k < 200; ++k)
  {
    const auto spec = random_spec(rng);
    REQUIRE(spec.check().empty());
    const auto r = trace(spec).rates;
    REQUIRE(r.size() == static_cast<std::size_t>(spec.total_steps));
    for (std::size_t i = 0; i < r.size(); ++i)
    {
      CHECK(r[i] >= 0.0);
      CHECK(r[i] <= spec.peak_rate() + 1e-12);
    }
    const auto back = io::spec_from_json(io::to_json(spec));
    const auto r2 = trace(back).rates;
    for (std::size_t i = 0; i < r.size(); ++i)
    {
      CHECK(r2[i] == doctest::Approx(r[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("random single phases descend monotonically within the box")
{
  std::mt19937_64 rng(12);
  for (int k = 0; k < 200; ++k)
  {
    const auto n = integer(rng, 1, 300);
    const double phi = uniform(rng, 0.0, 30.0);
    const double lo = uniform(rng, 0.0, 0.5);
    const double hi = lo + uniform(rng, 0.01, 2.0);
    const auto r = trace(make_uba(n, phi, hi, lo)).rates;
    for (std::size_t i = 0; i < r.size(); ++i)
    {
      CHECK(r[i] >= lo - 1e-15);
      CHECK(r[i] <= hi + 1e-15);
      if (i > 0)
      {
        CHECK(r[i] <= r[i - 1] + 1e-15);
      }
    }
  }
}

TEST_CASE("shape factor is monotone in x and in phi")
{
  std::mt19937_64 rng(3);
  for (int k = 0; k < 500; ++k)
  {
    const double phi = uniform(rng, 0.0, 50.0);
    const double x = uniform(rng, 0.0, 2.0);
    const double y = uniform(rng, x, 2.0);
    CHECK(uba_shape(x, phi) <= uba_shape(y, phi) + 1e-15);
    CHECK(uba_shape(x, phi) >= 0.0);
    CHECK(uba_shape(y, phi) <= 1.0 + 1e-15);
    // Larger phi sits below the curve of a smaller one.
    CHECK(uba_shape(x, phi + 1.0) <= uba_shape(x, phi) + 1e-15);
  }
  CHECK(uba_shape(2.0, 7.0) == doctest::Approx(1.0));
  CHECK(uba_shape(0.0, 7.0) == 0.0);
}

TEST_CASE("scaled UBA matches chebyshev on random boxes")
{
  std::mt19937_64 rng(8);
  for (int k = 0; k < 100; ++k)
  {
    const int n = static_cast<int>(integer(rng, 1, 40));
    const double lo = uniform(rng, 0.01, 5.0);
    const double hi = lo * uniform(rng, 1.0, 200.0);
    const auto a = scaled_uba_steps(n, lo, hi);
    const auto b = chebyshev_steps(n, lo, hi);
    for (std::size_t i = 0; i < a.size(); ++i)
    {
      CHECK(std::abs(a[i] - b[i]) <= 1e-12 * std::max(1.0, b[i]));
    }
  }
}

TEST_CASE("noiseless simulation matches products on random models")
{
  std::mt19937_64 rng(17);
  for (int k = 0; k < 30; ++k)
  {
    QuadModel m;
    const auto d = integer(rng, 1, 6);
    m.spectrum.clear();
    m.init_coeffs.clear();
    for (std::int64_t j = 0; j < d; ++j)
    {
      m.spectrum.push_back(uniform(rng, 0.1, 5.0));
      m.init_coeffs.push_back(uniform(rng, -2.0, 2.0));
    }
    const auto spec = random_spec(rng);
    const auto rates = trace(spec).rates;
    const auto s = simulate(m, spec, spec.total_steps, 1);
    const auto last = static_cast<std::size_t>(spec.total_steps);
    double g = 0.0;
    for (std::size_t j = 0; j < m.spectrum.size(); ++j)
    {
      const double lc = log_contraction(std::span<const double>(rates.data(), last), m.spectrum[j]);
      g += 0.5 * m.spectrum[j] * m.init_coeffs[j] * m.init_coeffs[j] * std::exp(lc);
    }
    if (std::isfinite(g) && g < divergence_gap)
    {
      CHECK(s.mean_gap.back() == doctest::Approx(g).epsilon(1e-9));
    }
  }
}

TEST_CASE("product bound holds at random points of the valid regime")
{
  std::mt19937_64 rng(41);
  for (int k = 0; k < 2000; ++k)
  {
    BoundInputs in;
    in.n = integer(rng, 1, 150);
    in.phi = uniform(rng, 0.0, 12.0);
    if (std::abs(in.phi - 2.0) < 0.01)
    {
      continue;
    }
    in.lambda_hi = uniform(rng, 0.2, 5.0);
    in.lambda_lo = in.lambda_hi * uniform(rng, 0.05, 1.0);
    in.eta_hi = uniform(rng, 0.01, 1.0) / in.lambda_hi;
    in.eta_lo = in.eta_hi * uniform(rng, 0.0, 0.5);
    in.spectrum = {in.lambda_lo};
    in.t_rel = integer(rng, 1, in.n);
    const double lam = uniform(rng, in.lambda_lo, in.lambda_hi);
    const auto etas = phase_rates(in);
    const double exact =
        exact_product(std::span<const double>(etas.data(), static_cast<std::size_t>(in.t_rel)), lam);
    CAPTURE(in.n);
    CAPTURE(in.phi);
    CAPTURE(in.t_rel);
    CHECK(std::exp(exact) <= lemma1_bound(in, lam) + 1e-12);
  }
}

TEST_CASE("fit recovers random phi")
{
  std::mt19937_64 rng(23);
  for (int k = 0; k < 12; ++k)
  {
    const double phi = std::exp(uniform(rng, std::log(0.3), std::log(15.0)));
    const auto n = integer(rng, 20, 120);
    const auto fit = fit_parametric(trace(make_uba(n, phi, 1.0, 0.0)).rates, 0.0, 1.0, n);
    CAPTURE(phi);
    CHECK(fit.phi == doctest::Approx(phi).epsilon(0.05));
  }
}
