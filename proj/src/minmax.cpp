// SPDX-License-Identifier: Apache-2.0

#include "uba/minmax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_linalg.h>

#include "uba/error.hpp"
#include "uba/parallel.hpp"

namespace uba
{

namespace
{

constexpr double pi = std::numbers::pi;
constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// Accepts a refined candidate as a tie with the current best.
bool near_tie(double v, double best)
{
  return v >= best - 1e-12 * std::max(1.0, std::abs(best));
}

struct Sample
{
  double lambda;
  double value;
};

// Golden-section search for the maximum of log_contraction on [a, b].
Sample golden_max(std::span<const double> etas, double a, double b)
{
  constexpr double inv_phi = 0.6180339887498948482;
  Sample best{a, log_contraction(etas, a)};
  auto consider = [&](double x, double v) {
    if (v > best.value || (v == best.value && x < best.lambda))
    {
      best = {x, v};
    }
  };
  consider(b, log_contraction(etas, b));

  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = log_contraction(etas, x1);
  double f2 = log_contraction(etas, x2);
  for (int it = 0; it < 100 && (b - a) > 1e-15 * std::max(1.0, std::abs(b)); ++it)
  {
    consider(x1, f1);
    consider(x2, f2);
    if (f1 >= f2)
    {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = log_contraction(etas, x1);
    }
    else
    {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = log_contraction(etas, x2);
    }
  }
  consider(x1, f1);
  consider(x2, f2);
  return best;
}

struct RestartResult
{
  std::vector<double> etas;
  WorstCase worst;
  bool converged = false;
  std::int64_t iterations = 0;
};

// Local maxima of log_contraction when every root 1 / eta lies in [lo, hi]: both
// endpoints plus one concave peak between each pair of consecutive roots.
bool ripple_peaks(const std::vector<double> &etas, double lo, double hi, std::vector<double> &z,
                  std::vector<double> &m)
{
  std::vector<double> roots;
  for (double e : etas)
  {
    if (!(e > 0.0))
    {
      return false;
    }
    roots.push_back(1.0 / e);
  }
  std::sort(roots.begin(), roots.end());
  if (roots.front() <= lo || roots.back() >= hi)
  {
    return false;
  }
  z.assign(1, lo);
  for (std::size_t i = 0; i + 1 < roots.size(); ++i)
  {
    if (!(roots[i + 1] > roots[i] * (1.0 + 1e-12)))
    {
      return false;
    }
    z.push_back(golden_max(etas, roots[i], roots[i + 1]).lambda);
  }
  z.push_back(hi);
  m.clear();
  for (double x : z)
  {
    m.push_back(log_contraction(etas, x));
  }
  return std::all_of(m.begin(), m.end(), [](double v) { return std::isfinite(v); });
}

// Newton iteration that equalizes the peaks: solve M_i + J_i d = s for (d, s), with a
// backtracking line search on the true worst case. Iterates stay strictly inside the
// box so the roots stay distinct and interior.
// Returns true when the accepted point has equal peaks to within tol (relative).
bool equal_ripple_polish(const MinMaxProblem &p, int grid, double tol, std::vector<double> &etas,
                         WorstCase &worst)
{
  const std::size_t n = etas.size();
  const double width = p.eta_hi - p.eta_lo;
  const double lo = p.eta_lo + 1e-9 * width;
  const double hi = p.eta_hi - 1e-9 * width;

  std::vector<double> x = etas;
  std::vector<std::size_t> order(n);
  for (std::size_t j = 0; j < n; ++j)
  {
    order[j] = j;
  }
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  // Pull bound-hugging or repeated values apart.
  const double gap = 1e-3 * width / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k)
  {
    double &v = x[order[k]];
    v = std::clamp(v, lo + gap * static_cast<double>(k + 1), hi - gap * static_cast<double>(n - k));
    if (k > 0 && v <= x[order[k - 1]] + 0.5 * gap)
    {
      v = std::min(x[order[k - 1]] + 0.5 * gap, hi - gap * static_cast<double>(n - k));
    }
  }
  WorstCase wx = worst_case_objective(x, p.lambda_lo, p.lambda_hi, grid);

  std::vector<double> z;
  std::vector<double> m;
  std::vector<double> trial(n);
  gsl_matrix *A = gsl_matrix_alloc(n + 1, n + 1);
  gsl_vector *rhs = gsl_vector_alloc(n + 1);
  gsl_vector *sol = gsl_vector_alloc(n + 1);
  gsl_permutation *perm = gsl_permutation_alloc(n + 1);

  for (int it = 0; it < 100; ++it)
  {
    if (!ripple_peaks(x, p.lambda_lo, p.lambda_hi, z, m))
    {
      break;
    }
    for (std::size_t i = 0; i <= n; ++i)
    {
      for (std::size_t j = 0; j < n; ++j)
      {
        gsl_matrix_set(A, i, j, -2.0 * z[i] / (1.0 - x[j] * z[i]));
      }
      gsl_matrix_set(A, i, n, -1.0);
      gsl_vector_set(rhs, i, -m[i]);
    }
    int sign = 0;
    if (gsl_linalg_LU_decomp(A, perm, &sign) != 0 || gsl_linalg_LU_solve(A, perm, rhs, sol) != 0)
    {
      break;
    }
    double step = 1.0;
    for (std::size_t j = 0; j < n; ++j)
    {
      const double d = gsl_vector_get(sol, j);
      if (d > 0.0)
      {
        step = std::min(step, 0.95 * (hi - x[j]) / d);
      }
      else if (d < 0.0)
      {
        step = std::min(step, 0.95 * (lo - x[j]) / d);
      }
    }
    bool improved = false;
    for (; step > 1e-8; step *= 0.5)
    {
      for (std::size_t j = 0; j < n; ++j)
      {
        trial[j] = x[j] + step * gsl_vector_get(sol, j);
      }
      const WorstCase wc = worst_case_objective(trial, p.lambda_lo, p.lambda_hi, grid);
      if (wc.log_objective < wx.log_objective)
      {
        const double gain = wx.log_objective - wc.log_objective;
        x = trial;
        wx = wc;
        improved = gain > 1e-15 * std::max(1.0, std::abs(wc.log_objective));
        break;
      }
    }
    if (!improved)
    {
      break;
    }
  }
  gsl_permutation_free(perm);
  gsl_vector_free(sol);
  gsl_vector_free(rhs);
  gsl_matrix_free(A);

  if (wx.log_objective < worst.log_objective)
  {
    etas = x;
    worst = wx;
  }
  if (!ripple_peaks(etas, p.lambda_lo, p.lambda_hi, z, m))
  {
    return false;
  }
  const auto [mn, mx] = std::minmax_element(m.begin(), m.end());
  return *mx - *mn <= tol * std::max(1.0, std::abs(*mx));
}

RestartResult run_restart(const MinMaxProblem &p, const SolverConfig &cfg, std::uint64_t seed)
{
  const auto n = static_cast<std::size_t>(p.n_steps);
  const double width = p.eta_hi - p.eta_lo;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> init(p.eta_lo, p.eta_hi);
  std::vector<double> etas(n);
  for (auto &e : etas)
  {
    e = init(rng);
  }

  RestartResult best;
  best.etas = etas;
  best.worst = worst_case_objective(etas, p.lambda_lo, p.lambda_hi, cfg.lambda_grid);
  equal_ripple_polish(p, cfg.lambda_grid, cfg.tolerance, best.etas, best.worst);
  etas = best.etas;
  std::vector<double> grad(n);
  double alpha = cfg.alpha;

  for (int cycle = 0; cycle < cfg.cycles; ++cycle)
  {
    if (cycle > 0)
    {
      etas = best.etas;
    }
    int stalled = 0;
    double previous = std::numeric_limits<double>::quiet_NaN();
    for (int k = 0; k < cfg.outer_iterations; ++k)
    {
      // (a) inner maximization over lambda
      const WorstCase wc = worst_case_objective(etas, p.lambda_lo, p.lambda_hi, cfg.lambda_grid);
      ++best.iterations;
      if (wc.log_objective < best.worst.log_objective)
      {
        best.worst = wc;
        best.etas = etas;
      }
      if (wc.log_objective == neg_inf)
      {
        best.converged = true;
        return best;
      }
      if (k > 0 && std::abs(wc.log_objective - previous) <=
                       cfg.tolerance * std::max(std::abs(previous), 1e-300))
      {
        ++stalled;
      }
      else
      {
        stalled = 0;
      }
      previous = wc.log_objective;
      if (stalled >= 10)
      {
        best.converged = cycle == cfg.cycles - 1;
        break;
      }

      // (b) projected gradient step on every eta against the current worst lambda
      const double lam = wc.lambda;
      double norm2 = 0.0;
      for (std::size_t t = 0; t < n; ++t)
      {
        double r = 1.0 - etas[t] * lam;
        if (r == 0.0)
        {
          const bool to_hi = (p.eta_hi - etas[t]) < (etas[t] - p.eta_lo);
          etas[t] += to_hi ? 1e-9 : -1e-9;
          r = 1.0 - etas[t] * lam;
        }
        grad[t] = -2.0 * lam / r;
        norm2 += grad[t] * grad[t];
      }
      const double norm = std::sqrt(norm2);
      if (!(norm > 0.0) || !std::isfinite(norm))
      {
        break;
      }
      const double step = alpha * width / std::sqrt(static_cast<double>(k + 1));
      for (std::size_t t = 0; t < n; ++t)
      {
        etas[t] = std::clamp(etas[t] - step * grad[t] / norm, p.eta_lo, p.eta_hi);
      }
    }
    alpha *= cfg.alpha_decay;
  }
  if (equal_ripple_polish(p, cfg.lambda_grid, cfg.tolerance, best.etas, best.worst))
  {
    best.converged = true;
  }
  return best;
}

}  // namespace

std::vector<Diagnostic> MinMaxProblem::check() const
{
  std::vector<Diagnostic> out;
  if (n_steps < 1)
  {
    out.push_back({"/n_steps", "n_steps must be at least 1"});
  }
  if (!(lambda_lo > 0.0) || !std::isfinite(lambda_lo))
  {
    out.push_back({"/lambda_lo", "lambda_lo must be positive"});
  }
  if (!(lambda_hi >= lambda_lo) || !std::isfinite(lambda_hi))
  {
    out.push_back({"/lambda_hi", "lambda_hi must be at least lambda_lo"});
  }
  if (!(eta_lo >= 0.0) || !std::isfinite(eta_lo))
  {
    out.push_back({"/eta_lo", "eta_lo must be non-negative"});
  }
  if (!(eta_hi > eta_lo) || !std::isfinite(eta_hi))
  {
    out.push_back({"/eta_hi", "eta_hi must exceed eta_lo"});
  }
  return out;
}

void MinMaxProblem::validate() const
{
  auto diags = check();
  if (!diags.empty())
  {
    std::ostringstream msg;
    msg << "invalid min-max problem:";
    for (const auto &d : diags)
    {
      msg << " [" << d.path << "] " << d.message << ";";
    }
    throw InvalidSpec(msg.str());
  }
}

std::vector<Diagnostic> SolverConfig::check() const
{
  std::vector<Diagnostic> out;
  auto positive = [&](bool ok, const char *path) {
    if (!ok)
    {
      out.push_back({path, "must be positive"});
    }
  };
  positive(outer_iterations > 0, "/solver/outer_iterations");
  positive(cycles > 0, "/solver/cycles");
  positive(alpha > 0.0, "/solver/alpha");
  positive(alpha_decay > 0.0, "/solver/alpha_decay");
  positive(lambda_grid > 1, "/solver/lambda_grid");
  positive(tolerance > 0.0, "/solver/tolerance");
  positive(restarts > 0, "/solver/restarts");
  return out;
}

double log_contraction(std::span<const double> etas, double lambda)
{
  // Running product, folded into the log accumulator before it can leave the normal
  // range; one log per block instead of one per factor.
  double acc = 0.0;
  double prod = 1.0;
  for (double eta : etas)
  {
    const double f = 1.0 - eta * lambda;
    if (f == 0.0)
    {
      return neg_inf;
    }
    prod *= f;
    const double mag = std::abs(prod);
    if (mag < 1e-150 || mag > 1e150)
    {
      acc += std::log(mag);
      prod = 1.0;
    }
  }
  return 2.0 * (acc + std::log(std::abs(prod)));
}

WorstCase worst_case_objective(std::span<const double> etas, double lambda_lo, double lambda_hi,
                               int grid_points)
{
  if (etas.empty())
  {
    throw InvalidSpec("worst_case_objective: empty step sequence");
  }
  if (!(lambda_lo > 0.0) || !(lambda_hi >= lambda_lo))
  {
    throw InvalidSpec("worst_case_objective: invalid eigenvalue box");
  }
  if (lambda_hi == lambda_lo)
  {
    return {lambda_lo, log_contraction(etas, lambda_lo)};
  }

  const int G = std::max(grid_points, 3);
  const double h = (lambda_hi - lambda_lo) / static_cast<double>(G - 1);
  auto grid = [&](int g) { return g == G - 1 ? lambda_hi : lambda_lo + h * g; };

  std::vector<double> v(static_cast<std::size_t>(G));
  for (int g = 0; g < G; ++g)
  {
    v[static_cast<std::size_t>(g)] = log_contraction(etas, grid(g));
  }

  std::vector<Sample> candidates{{lambda_lo, v.front()}, {lambda_hi, v.back()}};
  for (int g = 0; g < G; ++g)
  {
    const double c = v[static_cast<std::size_t>(g)];
    const double l = g > 0 ? v[static_cast<std::size_t>(g - 1)] : neg_inf;
    const double r = g < G - 1 ? v[static_cast<std::size_t>(g + 1)] : neg_inf;
    // Peaks only; flat plateaus keep their grid samples.
    if (c >= l && c >= r && (c > l || c > r))
    {
      candidates.push_back({grid(g), c});
      candidates.push_back(golden_max(etas, grid(std::max(g - 1, 0)), grid(std::min(g + 1, G - 1))));
    }
  }

  double best = neg_inf;
  for (const auto &s : candidates)
  {
    best = std::max(best, s.value);
  }
  if (best == neg_inf)
  {
    return {lambda_lo, neg_inf};
  }
  WorstCase out{lambda_hi, best};
  for (const auto &s : candidates)
  {
    if (near_tie(s.value, best) && s.lambda < out.lambda)
    {
      out.lambda = s.lambda;
    }
  }
  return out;
}

MinMaxSolution solve_minmax(const MinMaxProblem &problem, const SolverConfig &config)
{
  problem.validate();
  if (auto diags = config.check(); !diags.empty())
  {
    throw InvalidSpec("invalid solver config: [" + diags.front().path + "] " +
                      diags.front().message);
  }

  MinMaxSolution sol;
  const auto n = static_cast<std::size_t>(problem.n_steps);
  if (problem.lambda_lo == problem.lambda_hi)
  {
    // Single eigenvalue: its reciprocal annihilates it in one step when feasible.
    const double eta = std::clamp(1.0 / problem.lambda_lo, problem.eta_lo, problem.eta_hi);
    sol.etas.assign(n, eta);
    sol.worst_lambda = problem.lambda_lo;
    sol.log_objective = eta == 1.0 / problem.lambda_lo ? neg_inf
                                                        : log_contraction(sol.etas, problem.lambda_lo);
    sol.converged = true;
  }
  else
  {
    // A step above 1 / lambda_lo or below 1 / lambda_hi is beaten at every lambda by
    // its clamp, so the search runs on the box intersected with that interval.
    MinMaxProblem reduced = problem;
    reduced.eta_lo = std::clamp(1.0 / problem.lambda_hi, problem.eta_lo, problem.eta_hi);
    reduced.eta_hi = std::clamp(1.0 / problem.lambda_lo, problem.eta_lo, problem.eta_hi);
    std::vector<RestartResult> results(static_cast<std::size_t>(config.restarts));
    if (reduced.eta_lo == reduced.eta_hi)
    {
      results.resize(1);
      results[0].etas.assign(n, reduced.eta_lo);
      results[0].worst = worst_case_objective(results[0].etas, problem.lambda_lo,
                                              problem.lambda_hi, config.lambda_grid);
      results[0].converged = true;
    }
    else
    {
      gsl_set_error_handler_off();
      parallel_for(results.size(), [&](std::size_t r) {
        results[r] = run_restart(reduced, config, config.seed + r);
      });
    }
    std::size_t winner = 0;
    for (std::size_t r = 1; r < results.size(); ++r)
    {
      if (results[r].worst.log_objective < results[winner].worst.log_objective)
      {
        winner = r;
      }
    }
    sol.etas = std::move(results[winner].etas);
    sol.worst_lambda = results[winner].worst.lambda;
    sol.log_objective = results[winner].worst.log_objective;
    sol.converged = results[winner].converged;
    sol.iterations_used = results[winner].iterations;
  }
  sol.etas_sorted_desc = sol.etas;
  std::sort(sol.etas_sorted_desc.begin(), sol.etas_sorted_desc.end(), std::greater<>());
  return sol;
}

std::vector<double> chebyshev_steps(std::int64_t n, double lambda_lo, double lambda_hi)
{
  if (n < 1)
  {
    throw InvalidSpec("chebyshev_steps: n must be at least 1");
  }
  if (!(lambda_lo > 0.0) || !(lambda_hi >= lambda_lo))
  {
    throw InvalidSpec("chebyshev_steps: invalid eigenvalue box");
  }
  std::vector<double> steps(static_cast<std::size_t>(n));
  const double sum = lambda_lo + lambda_hi;
  const double diff = lambda_hi - lambda_lo;
  for (std::int64_t t = 1; t <= n; ++t)
  {
    const double root = std::cos(static_cast<double>(2 * t - 1) * pi / (2.0 * static_cast<double>(n)));
    steps[static_cast<std::size_t>(t - 1)] = 2.0 / (sum - diff * root);
  }
  return steps;
}

double chebyshev_objective(std::int64_t n, double lambda_lo, double lambda_hi)
{
  if (n == 0)
  {
    return 0.0;
  }
  if (n < 0 || !(lambda_lo > 0.0) || !(lambda_hi >= lambda_lo))
  {
    throw InvalidSpec("chebyshev_objective: invalid arguments");
  }
  if (lambda_lo == lambda_hi)
  {
    return neg_inf;
  }
  const double d = (lambda_lo + lambda_hi) / (lambda_hi - lambda_lo);
  const double y = static_cast<double>(n) * std::acosh(d);
  // ln cosh(y) without overflow for large y.
  const double log_cosh = y > 20.0 ? y + std::log1p(std::exp(-2.0 * y)) - std::numbers::ln2
                                   : std::log(std::cosh(y));
  return -2.0 * log_cosh;
}

std::vector<double> scaled_uba_steps(std::int64_t n, double lambda_lo, double lambda_hi)
{
  if (n < 1 || !(lambda_lo > 0.0) || !(lambda_hi >= lambda_lo))
  {
    throw InvalidSpec("scaled_uba_steps: invalid arguments");
  }
  const ScheduleSpec spec = make_uba(n, 2.0 * lambda_hi / lambda_lo, 1.0, 0.0);
  const double span = 1.0 / lambda_lo - 1.0 / lambda_hi;
  std::vector<double> steps(static_cast<std::size_t>(n));
  for (std::int64_t t = 1; t <= n; ++t)
  {
    steps[static_cast<std::size_t>(t - 1)] = span * uba_rate(t, spec.plan, 0.0) + 1.0 / lambda_hi;
  }
  return steps;
}

}  // namespace uba
