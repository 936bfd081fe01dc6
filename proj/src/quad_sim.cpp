// SPDX-License-Identifier: Apache-2.0

#include "uba/quad_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "uba/error.hpp"
#include "uba/minmax.hpp"
#include "uba/parallel.hpp"

namespace uba
{

namespace
{

double pairwise_sum(const double *x, std::size_t n)
{
  if (n <= 8)
  {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
      s += x[i];
    }
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

}  // namespace

std::vector<Diagnostic> QuadModel::check() const
{
  std::vector<Diagnostic> out;
  if (spectrum.empty())
  {
    out.push_back({"/spectrum", "spectrum must be non-empty"});
  }
  for (std::size_t j = 0; j < spectrum.size(); ++j)
  {
    if (!(spectrum[j] > 0.0) || !std::isfinite(spectrum[j]))
    {
      out.push_back({"/spectrum/" + std::to_string(j), "eigenvalues must be positive"});
    }
  }
  if (init_coeffs.size() != spectrum.size())
  {
    out.push_back({"/init_coeffs", "need one coefficient per eigenvalue"});
  }
  for (std::size_t j = 0; j < init_coeffs.size(); ++j)
  {
    if (!std::isfinite(init_coeffs[j]))
    {
      out.push_back({"/init_coeffs/" + std::to_string(j), "coefficient must be finite"});
    }
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
  {
    out.push_back({"/sigma", "sigma must be non-negative"});
  }
  return out;
}

void QuadModel::validate() const { raise_if_any("invalid quadratic model", check()); }

double QuadModel::initial_gap() const
{
  double g = 0.0;
  for (std::size_t j = 0; j < spectrum.size(); ++j)
  {
    g += 0.5 * spectrum[j] * init_coeffs[j] * init_coeffs[j];
  }
  return g;
}

double QuadModel::init_dist_sq() const
{
  double d = 0.0;
  for (double s : init_coeffs)
  {
    d += s * s;
  }
  return d;
}

double QuadModel::lambda_lo() const { return *std::min_element(spectrum.begin(), spectrum.end()); }
double QuadModel::lambda_hi() const { return *std::max_element(spectrum.begin(), spectrum.end()); }

std::int64_t record_stride(std::int64_t steps)
{
  return steps <= 1000 ? 1 : (steps + 999) / 1000;
}

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

TrajectoryStats simulate(const QuadModel &model, const ScheduleSpec &spec, std::int64_t steps,
                         std::int64_t replicas)
{
  model.validate();
  spec.validate();
  if (steps < 0 || steps > spec.total_steps)
  {
    throw InvalidSpec("simulate: steps must lie in [0, total_steps]");
  }
  if (replicas < 1)
  {
    throw InvalidSpec("simulate: replicas must be at least 1");
  }

  const RateTrace tr = trace(spec);
  const std::span<const double> rates(tr.rates.data(), static_cast<std::size_t>(steps));

  TrajectoryStats stats;
  stats.replicas = replicas;
  const std::int64_t stride = record_stride(steps);
  for (std::int64_t t = 0; t <= steps; t += stride)
  {
    stats.steps.push_back(t);
  }
  if (stats.steps.back() != steps)
  {
    stats.steps.push_back(steps);
  }
  const std::size_t records = stats.steps.size();
  const std::size_t dims = model.spectrum.size();
  const auto R = static_cast<std::size_t>(replicas);

  std::vector<double> sqrt_lambda(dims);
  for (std::size_t j = 0; j < dims; ++j)
  {
    sqrt_lambda[j] = std::sqrt(model.spectrum[j]);
  }

  // gaps[k * R + r]: replica r at record k.
  std::vector<double> gaps(records * R);
  parallel_for(R, [&](std::size_t r) {
    std::mt19937_64 rng(model.seed ^ splitmix64(r));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v = model.init_coeffs;
    bool diverged = false;
    std::size_t k = 0;
    auto record = [&](std::int64_t t) {
      if (k < records && stats.steps[k] == t)
      {
        double g = 0.0;
        if (!diverged)
        {
          for (std::size_t j = 0; j < dims; ++j)
          {
            g += 0.5 * model.spectrum[j] * v[j] * v[j];
          }
          if (!(g <= divergence_gap))
          {
            diverged = true;
          }
        }
        gaps[k * R + r] = diverged ? std::numeric_limits<double>::infinity() : g;
        ++k;
      }
    };
    record(0);
    for (std::int64_t t = 1; t <= steps; ++t)
    {
      const double eta = rates[static_cast<std::size_t>(t - 1)];
      for (std::size_t j = 0; j < dims; ++j)
      {
        const double noise = model.sigma > 0.0 ? normal(rng) : 0.0;
        v[j] = (1.0 - eta * model.spectrum[j]) * v[j] - eta * model.sigma * sqrt_lambda[j] * noise;
      }
      record(t);
    }
  });

  stats.mean_gap.resize(records);
  stats.stderr_gap.resize(records);
  std::vector<double> dev(R);
  for (std::size_t k = 0; k < records; ++k)
  {
    const double *g = gaps.data() + k * R;
    const double mean = pairwise_sum(g, R) / static_cast<double>(R);
    stats.mean_gap[k] = mean;
    if (R < 2 || !std::isfinite(mean))
    {
      stats.stderr_gap[k] = std::isfinite(mean) ? 0.0 : std::numeric_limits<double>::infinity();
      continue;
    }
    for (std::size_t r = 0; r < R; ++r)
    {
      dev[r] = (g[r] - mean) * (g[r] - mean);
    }
    const double var = pairwise_sum(dev.data(), R) / static_cast<double>(R - 1);
    stats.stderr_gap[k] = std::sqrt(var / static_cast<double>(R));
  }

  for (double lam : model.spectrum)
  {
    const double lc = log_contraction(rates, lam);
    stats.log_contraction.push_back(lc);
    stats.worst_direction_contraction.push_back(std::exp(lc));
  }
  return stats;
}

std::vector<ComparisonRow> compare_schedules(const QuadModel &model,
                                             std::span<const NamedSchedule> specs,
                                             std::int64_t steps, std::int64_t replicas)
{
  if (specs.empty())
  {
    throw InvalidSpec("compare_schedules: no schedules given");
  }
  for (const auto &s : specs)
  {
    if (s.spec.total_steps != specs.front().spec.total_steps)
    {
      throw InvalidSpec("compare_schedules: schedule '" + s.name +
                        "' has a different total_steps budget");
    }
  }
  std::vector<ComparisonRow> rows;
  for (const auto &s : specs)
  {
    const TrajectoryStats st = simulate(model, s.spec, steps, replicas);
    ComparisonRow row;
    row.schedule = s.name;
    row.final_gap = st.mean_gap.back();
    row.final_stderr = st.stderr_gap.back();
    row.worst_contraction_log =
        *std::max_element(st.log_contraction.begin(), st.log_contraction.end());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace uba
