// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "uba/bounds.hpp"
#include "uba/error.hpp"
#include "uba/minmax.hpp"
#include "uba/quad_sim.hpp"

using namespace uba;

namespace
{

ScheduleSpec constant(std::int64_t n, double eta)
{
  return make_uba(n, 0.0, eta);
}

// E[gap_t] by the second-moment recursion, per coordinate.
std::vector<double> expected_gap(const QuadModel &m, const std::vector<double> &rates)
{
  std::vector<double> m2(m.spectrum.size());
  for (std::size_t j = 0; j < m2.size(); ++j)
  {
    m2[j] = m.init_coeffs[j] * m.init_coeffs[j];
  }
  std::vector<double> out;
  auto gap = [&] {
    double g = 0.0;
    for (std::size_t j = 0; j < m2.size(); ++j)
    {
      g += 0.5 * m.spectrum[j] * m2[j];
    }
    return g;
  };
  out.push_back(gap());
  for (double eta : rates)
  {
    for (std::size_t j = 0; j < m2.size(); ++j)
    {
      const double a = 1.0 - eta * m.spectrum[j];
      m2[j] = a * a * m2[j] + eta * eta * m.sigma * m.sigma * m.spectrum[j];
    }
    out.push_back(gap());
  }
  return out;
}

}  // namespace

TEST_CASE("record stride")
{
  CHECK(record_stride(0) == 1);
  CHECK(record_stride(1000) == 1);
  CHECK(record_stride(1001) == 2);
  CHECK(record_stride(5000) == 5);
}

TEST_CASE("noiseless single direction halves each step")
{
  QuadModel m;
  m.spectrum = {1.0};
  m.init_coeffs = {std::sqrt(2.0)};
  const auto s = simulate(m, constant(10, 0.5), 10, 1);
  REQUIRE(s.steps.size() == 11);
  for (std::size_t t = 0; t < s.steps.size(); ++t)
  {
    CHECK(s.mean_gap[t] == doctest::Approx(std::pow(0.25, static_cast<double>(t))).epsilon(1e-14));
    CHECK(s.stderr_gap[t] == 0.0);
  }
}

TEST_CASE("noiseless trajectory matches the product formula")
{
  QuadModel m;
  m.spectrum = {0.5, 1.0, 3.0, 7.0};
  m.init_coeffs = {1.0, -0.3, 0.25, 0.1};
  const auto spec = make_uba(120, 4.0, 0.25, 0.01);
  const auto rates = trace(spec).rates;
  const auto s = simulate(m, spec, 120, 3);
  for (std::size_t k = 0; k < s.steps.size(); ++k)
  {
    double g = 0.0;
    for (std::size_t j = 0; j < m.spectrum.size(); ++j)
    {
      double p = 1.0;
      for (std::int64_t i = 0; i < s.steps[k]; ++i)
      {
        const double a = 1.0 - rates[static_cast<std::size_t>(i)] * m.spectrum[j];
        p *= a * a;
      }
      g += 0.5 * m.spectrum[j] * m.init_coeffs[j] * m.init_coeffs[j] * p;
    }
    CHECK(std::abs(s.mean_gap[k] - g) <= 1e-10 * g);
  }
  const double exact = log_contraction(rates, 7.0);
  CHECK(s.log_contraction.back() == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("noise has the requested covariance")
{
  // One step from the optimum: E[gap] = 0.5 eta^2 sigma^2 sum lambda^2.
  QuadModel m;
  m.spectrum = {1.0, 4.0};
  m.init_coeffs = {0.0, 0.0};
  m.sigma = 0.3;
  m.seed = 11;
  const auto s = simulate(m, constant(1, 0.2), 1, 100000);
  const double expect = 0.5 * 0.04 * 0.09 * (1.0 + 16.0);
  CHECK(std::abs(s.mean_gap[1] - expect) <= 0.05 * expect);
}

TEST_CASE("monte carlo mean follows the second-moment recursion")
{
  QuadModel m;
  m.spectrum = {1.0, 2.0, 4.0};
  m.init_coeffs = {0.5, 0.5, 0.5};
  m.sigma = 0.1;
  m.seed = 3;
  const auto spec = make_uba(60, 3.0, 0.25);
  const auto s = simulate(m, spec, 60, 4096);
  const auto e = expected_gap(m, trace(spec).rates);
  for (std::size_t k = 1; k < s.steps.size(); ++k)
  {
    CAPTURE(k);
    CHECK(std::abs(s.mean_gap[k] - e[static_cast<std::size_t>(s.steps[k])]) <=
          5.0 * s.stderr_gap[k] + 1e-15);
  }
}

TEST_CASE("simulation is reproducible and seed dependent")
{
  QuadModel m;
  m.spectrum = {1.0, 2.0};
  m.init_coeffs = {1.0, 1.0};
  m.sigma = 0.1;
  m.seed = 5;
  const auto spec = make_uba(30, 1.0, 0.3);
  const auto a = simulate(m, spec, 30, 64);
  const auto b = simulate(m, spec, 30, 64);
  CHECK(a.mean_gap == b.mean_gap);
  CHECK(a.stderr_gap == b.stderr_gap);
  m.seed = 6;
  CHECK(simulate(m, spec, 30, 64).mean_gap != a.mean_gap);
}

TEST_CASE("long runs are thinned and end on the last step")
{
  QuadModel m;
  const auto s = simulate(m, constant(2501, 0.001), 2501, 1);
  CHECK(s.steps.front() == 0);
  CHECK(s.steps[1] == 3);
  CHECK(s.steps.back() == 2501);
}

TEST_CASE("divergence is recorded as infinity")
{
  QuadModel m;
  m.init_coeffs = {1.0};
  const auto s = simulate(m, constant(2000, 3.0), 2000, 1);
  CHECK(std::isinf(s.mean_gap.back()));
  REQUIRE(s.steps[1] == 2);
  CHECK(s.mean_gap[1] == doctest::Approx(8.0));
}

TEST_CASE("gap bound covers the expected gap")
{
  QuadModel m;
  m.spectrum = {1.0, 2.0, 4.0};
  m.init_coeffs = {0.5, 0.5, 0.5};
  m.sigma = 0.1;
  for (double phi : {0.5, 3.0})
  {
    const auto spec = make_uba(50, phi, 0.25);
    const auto e = expected_gap(m, trace(spec).rates);
    BoundInputs in;
    in.n = 50;
    in.phi = phi;
    in.eta_hi = 0.25;
    in.lambda_lo = 1.0;
    in.lambda_hi = 4.0;
    in.sigma = 0.1;
    in.spectrum = m.spectrum;
    in.init_dist_sq = m.init_dist_sq();
    for (std::int64_t t = 1; t <= 50; ++t)
    {
      in.t_rel = t;
      const auto b = theorem1_bound(in);
      CHECK(e[static_cast<std::size_t>(t)] <= b.bias + b.variance);
    }
  }
}

TEST_CASE("schedule comparison")
{
  QuadModel m;
  m.spectrum = {1.0, 5.0, 10.0};
  m.init_coeffs = {1.0, 1.0, 1.0};
  const std::vector<NamedSchedule> specs{{"uba", make_uba(32, 20.0, 1.0, 0.1)},
                                         {"flat", constant(32, 0.1)}};
  const auto rows = compare_schedules(m, specs, 32, 1);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].schedule == "uba");
  CHECK(rows[0].worst_contraction_log < rows[1].worst_contraction_log);
  CHECK(rows[0].final_gap < rows[1].final_gap);

  const std::vector<NamedSchedule> uneven{{"a", constant(10, 0.1)}, {"b", constant(12, 0.1)}};
  CHECK_THROWS_AS(compare_schedules(m, uneven, 10, 1), InvalidSpec);
}

TEST_CASE("bigger budgets contract more")
{
  QuadModel m;
  m.spectrum = {1.0, 10.0};
  m.init_coeffs = {1.0, 1.0};
  double prev = 1.0;
  for (std::int64_t n : {8, 32, 128})
  {
    const std::vector<NamedSchedule> s{{"uba", make_uba(n, 20.0, 1.0, 0.1)}};
    const double c = compare_schedules(m, s, n, 1)[0].worst_contraction_log;
    CHECK(c < prev);
    prev = c;
  }
}

TEST_CASE("model validation")
{
  QuadModel m;
  m.spectrum = {1.0, -2.0};
  m.init_coeffs = {1.0};
  CHECK(m.check().size() == 2);
  CHECK_THROWS_AS(simulate(m, constant(5, 0.1), 5, 1), InvalidSpec);
  QuadModel ok;
  CHECK_THROWS_AS(simulate(ok, constant(5, 0.1), 6, 1), InvalidSpec);
  CHECK_THROWS_AS(simulate(ok, constant(5, 0.1), 5, 0), InvalidSpec);
}
