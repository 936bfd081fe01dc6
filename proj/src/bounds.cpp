// SPDX-License-Identifier: Apache-2.0

#include "uba/bounds.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "uba/error.hpp"
#include "uba/minmax.hpp"
#include "uba/parallel.hpp"

namespace uba
{

namespace
{

constexpr double pi = std::numbers::pi;

void check_phi(double phi)
{
  if (std::abs(phi - 2.0) < phi_exclusion)
  {
    throw InvalidSpec("bounds are undefined at phi = 2 (|phi - 2| < 1e-6); use the cosine "
                      "closed form for this case");
  }
}

double exponent_lambda(const BoundInputs &in, double lambda, ExponentLambda mode)
{
  return mode == ExponentLambda::AsPrinted && in.phi < 2.0 ? lambda : in.lambda_lo;
}

// |tau| evaluated with the given exponent eigenvalue.
double abs_tau(const BoundInputs &in, double lambda_exp)
{
  const double x = phase_cosine(in.t_rel, in.n, false);
  return 4.0 * lambda_exp * (in.eta_hi - in.eta_lo) * x * static_cast<double>(in.n) /
         (std::abs(in.phi - 2.0) * pi);
}

// ln of the branch base at t_rel (<= 0).
double log_base(const BoundInputs &in)
{
  const double n = static_cast<double>(in.n);
  const double t = static_cast<double>(in.t_rel);
  if (in.phi > 2.0)
  {
    const double g = (in.phi - 2.0) * pi;
    return std::log((4.0 * n + g) / (4.0 * n + g * t));
  }
  const double A = 2.0 * in.phi + 2.0 * pi - in.phi * pi;
  const double c = (2.0 - in.phi) * pi / n;
  return std::log((A - c * (t - 0.5)) / (A + 0.5 * c));
}

// ln of the variance ratio between iteration i and t_rel (<= 0).
double log_ratio(const BoundInputs &in, std::int64_t i)
{
  const double n = static_cast<double>(in.n);
  const double t = static_cast<double>(in.t_rel);
  const double s = static_cast<double>(i);
  if (in.phi > 2.0)
  {
    const double g = (in.phi - 2.0) * pi;
    return std::log((4.0 * n + g * s) / (4.0 * n + g * t));
  }
  const double A = 2.0 * in.phi + 2.0 * pi - in.phi * pi;
  const double c = (2.0 - in.phi) * pi / n;
  return std::log((A - c * (t - 0.5)) / (A - c * (s - 0.5)));
}

}  // namespace

std::vector<Diagnostic> BoundInputs::check() const
{
  std::vector<Diagnostic> out;
  if (n < 1)
  {
    out.push_back({"/n", "phase length must be at least 1"});
  }
  if (!(phi >= 0.0) || !std::isfinite(phi))
  {
    out.push_back({"/phi", "phi must be non-negative and finite"});
  }
  if (!(eta_lo >= 0.0) || !(eta_hi >= eta_lo) || !std::isfinite(eta_hi))
  {
    out.push_back({"/eta_hi", "need 0 <= eta_lo <= eta_hi"});
  }
  if (!(lambda_lo > 0.0) || !(lambda_hi >= lambda_lo) || !std::isfinite(lambda_hi))
  {
    out.push_back({"/lambda_hi", "need 0 < lambda_lo <= lambda_hi"});
  }
  if (t_rel < 1 || t_rel > n)
  {
    out.push_back({"/t_rel", "t_rel must lie in [1, n]"});
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
  {
    out.push_back({"/sigma", "sigma must be non-negative"});
  }
  if (spectrum.empty())
  {
    out.push_back({"/spectrum", "spectrum must be non-empty"});
  }
  const double slack = 1e-12 * std::max(1.0, lambda_hi);
  for (std::size_t j = 0; j < spectrum.size(); ++j)
  {
    if (!(spectrum[j] >= lambda_lo - slack && spectrum[j] <= lambda_hi + slack))
    {
      out.push_back({"/spectrum/" + std::to_string(j), "eigenvalue outside [lambda_lo, lambda_hi]"});
    }
  }
  if (!(init_dist_sq >= 0.0) || !std::isfinite(init_dist_sq))
  {
    out.push_back({"/init_dist_sq", "init_dist_sq must be non-negative"});
  }
  return out;
}

void BoundInputs::validate() const
{
  raise_if_any("invalid bound inputs", check());
  check_phi(phi);
}

double tau(const BoundInputs &in, double lambda)
{
  in.validate();
  const double x = phase_cosine(in.t_rel, in.n, false);
  return 4.0 * lambda * (in.eta_hi - in.eta_lo) * x * static_cast<double>(in.n) /
         ((in.phi - 2.0) * pi);
}

double log_lemma1_bound(const BoundInputs &in, double lambda, ExponentLambda exponent)
{
  in.validate();
  const double t = static_cast<double>(in.t_rel);
  const double e = abs_tau(in, exponent_lambda(in, lambda, exponent));
  const double lb = log_base(in);
  return -2.0 * lambda * in.eta_lo * t + (e == 0.0 ? 0.0 : e * lb);
}

double lemma1_bound(const BoundInputs &in, double lambda, ExponentLambda exponent)
{
  return std::exp(log_lemma1_bound(in, lambda, exponent));
}

double exact_product(std::span<const double> etas, double lambda)
{
  return log_contraction(etas, lambda);
}

std::vector<double> phase_rates(const BoundInputs &in)
{
  std::vector<double> etas;
  etas.reserve(static_cast<std::size_t>(std::max<std::int64_t>(in.n, 0)));
  for (std::int64_t t = 1; t <= in.n; ++t)
  {
    const double x = phase_cosine(t, in.n, false);
    etas.push_back((in.eta_hi - in.eta_lo) * uba_shape(x, in.phi) + in.eta_lo);
  }
  return etas;
}

GapBound theorem1_bound(const BoundInputs &in, ExponentLambda exponent)
{
  in.validate();
  GapBound out;
  const double t = static_cast<double>(in.t_rel);
  const double lb = log_base(in);

  if (in.init_dist_sq > 0.0)
  {
    const double e = abs_tau(in, in.lambda_lo);
    out.bias = std::exp((e == 0.0 ? 0.0 : e * lb) - 2.0 * in.lambda_lo * in.eta_lo * t) *
               in.lambda_hi * in.init_dist_sq;
  }

  if (in.sigma > 0.0)
  {
    const auto etas = phase_rates(in);
    double sum = 0.0;
    for (std::int64_t i = 1; i <= in.t_rel; ++i)
    {
      const double eta = etas[static_cast<std::size_t>(i - 1)];
      const double lr = log_ratio(in, i);
      double inner = 0.0;
      for (double lam : in.spectrum)
      {
        const double e = abs_tau(in, exponent_lambda(in, lam, exponent));
        inner += lam * lam *
                 std::exp(-2.0 * lam * in.eta_lo * static_cast<double>(in.t_rel - i) +
                          (e == 0.0 ? 0.0 : e * lr));
      }
      sum += eta * eta * inner;
    }
    out.variance = in.sigma * in.sigma * sum;
  }
  return out;
}

std::vector<Diagnostic> SweepConfig::check() const
{
  std::vector<Diagnostic> out;
  if (phis.empty())
  {
    out.push_back({"/phi", "at least one phi is required"});
  }
  for (std::size_t i = 0; i < phis.size(); ++i)
  {
    if (!(phis[i] >= 0.0) || std::abs(phis[i] - 2.0) < phi_exclusion)
    {
      out.push_back({"/phi/" + std::to_string(i), "phi must be non-negative and away from 2"});
    }
  }
  if (lengths.empty())
  {
    out.push_back({"/n", "at least one phase length is required"});
  }
  for (std::size_t i = 0; i < lengths.size(); ++i)
  {
    if (lengths[i] < 1)
    {
      out.push_back({"/n/" + std::to_string(i), "phase length must be at least 1"});
    }
  }
  if (lambda_points < 1)
  {
    out.push_back({"/lambda_points", "must be at least 1"});
  }
  if (!(eta_lo >= 0.0) || !(eta_hi >= eta_lo))
  {
    out.push_back({"/eta_hi", "need 0 <= eta_lo <= eta_hi"});
  }
  if (!(lambda_lo > 0.0) || !(lambda_hi >= lambda_lo))
  {
    out.push_back({"/lambda_hi", "need 0 < lambda_lo <= lambda_hi"});
  }
  return out;
}

std::vector<SweepRow> bound_sweep(const SweepConfig &config)
{
  raise_if_any("invalid bound sweep", config.check());

  struct Cell
  {
    double phi;
    std::int64_t n;
  };
  std::vector<Cell> cells;
  for (double phi : config.phis)
  {
    for (std::int64_t n : config.lengths)
    {
      cells.push_back({phi, n});
    }
  }

  std::vector<std::vector<SweepRow>> blocks(cells.size());
  parallel_for(cells.size(), [&](std::size_t c) {
    BoundInputs in;
    in.n = cells[c].n;
    in.phi = cells[c].phi;
    in.eta_lo = config.eta_lo;
    in.eta_hi = config.eta_hi;
    in.lambda_lo = config.lambda_lo;
    in.lambda_hi = config.lambda_hi;
    in.spectrum = {config.lambda_lo};
    const auto etas = phase_rates(in);
    for (int p = 0; p < config.lambda_points; ++p)
    {
      const double lambda =
          config.lambda_points == 1
              ? config.lambda_lo
              : config.lambda_lo + (config.lambda_hi - config.lambda_lo) * p /
                                       static_cast<double>(config.lambda_points - 1);
      double log_exact = 0.0;
      for (std::int64_t t = 1; t <= in.n; ++t)
      {
        const double f = std::abs(1.0 - etas[static_cast<std::size_t>(t - 1)] * lambda);
        log_exact += f == 0.0 ? -std::numeric_limits<double>::infinity() : 2.0 * std::log(f);
        in.t_rel = t;
        const double log_bound = log_lemma1_bound(in, lambda, config.exponent);
        blocks[c].push_back({in.phi, in.n, lambda, t, log_exact, log_bound, log_bound - log_exact});
      }
    }
  });

  std::vector<SweepRow> rows;
  for (auto &b : blocks)
  {
    rows.insert(rows.end(), b.begin(), b.end());
  }
  return rows;
}

}  // namespace uba
