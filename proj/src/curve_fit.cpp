// SPDX-License-Identifier: Apache-2.0

#include "uba/curve_fit.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multifit_nlinear.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include "uba/error.hpp"
#include "uba/parallel.hpp"

namespace uba
{

namespace
{

// Parameter box for the simplex search.
constexpr double a_max = 2000.0;
constexpr double b_max = 1000.0;
constexpr double c_min = -500.0;
constexpr double c_max = 1500.0;
constexpr double penalty = 1e10;
constexpr int num_starts = 16;

struct VectorDeleter
{
  void operator()(gsl_vector *v) const { gsl_vector_free(v); }
};
struct SimplexDeleter
{
  void operator()(gsl_multimin_fminimizer *s) const { gsl_multimin_fminimizer_free(s); }
};
struct NlinearDeleter
{
  void operator()(gsl_multifit_nlinear_workspace *w) const { gsl_multifit_nlinear_free(w); }
};
using Vector = std::unique_ptr<gsl_vector, VectorDeleter>;

Vector make_vector(std::initializer_list<double> values)
{
  Vector v(gsl_vector_alloc(values.size()));
  std::size_t i = 0;
  for (double x : values)
  {
    gsl_vector_set(v.get(), i++, x);
  }
  return v;
}

struct FitData
{
  std::vector<double> x;  // 1 + cos(theta_t)
  std::vector<double> y;  // normalized rates
};

double sum_squares(const FitData &d, double a, double b, double c)
{
  double s = 0.0;
  for (std::size_t t = 0; t < d.x.size(); ++t)
  {
    const double den = b + c * d.x[t];
    if (!(den > 1e-12 * (std::abs(b) + std::abs(c) * d.x[t])))
    {
      return penalty;
    }
    const double r = a * d.x[t] / den - d.y[t];
    s += r * r;
  }
  return s;
}

double simplex_objective(const gsl_vector *p, void *params)
{
  const auto &d = *static_cast<const FitData *>(params);
  const double a = gsl_vector_get(p, 0);
  const double b = gsl_vector_get(p, 1);
  const double c = gsl_vector_get(p, 2);
  if (!(a > 0.0 && a <= a_max && b > 0.0 && b <= b_max && c >= c_min && c <= c_max))
  {
    return penalty;
  }
  return sum_squares(d, a, b, c);
}

struct Params
{
  double a, b, c, ss;
};

Params run_simplex(const FitData &d, double a, double b, double c)
{
  gsl_multimin_function fn;
  fn.n = 3;
  fn.f = &simplex_objective;
  fn.params = const_cast<FitData *>(&d);

  Vector x = make_vector({a, b, c});
  Vector step = make_vector({0.25 * a, 0.25 * b, 0.25 * std::max(std::abs(c), 0.1 * a)});
  std::unique_ptr<gsl_multimin_fminimizer, SimplexDeleter> s(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3));
  gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), step.get());
  for (int it = 0; it < 4000; ++it)
  {
    if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS)
    {
      break;
    }
    const double size = gsl_multimin_fminimizer_size(s.get());
    if (gsl_multimin_test_size(size, 1e-13 * std::max(1.0, a)) == GSL_SUCCESS)
    {
      break;
    }
  }
  const gsl_vector *best = gsl_multimin_fminimizer_x(s.get());
  return {gsl_vector_get(best, 0), gsl_vector_get(best, 1), gsl_vector_get(best, 2),
          gsl_multimin_fminimizer_minimum(s.get())};
}

// Residuals of the scale-free form x / (phi + r x) for the Levenberg-Marquardt polish.
int ratio_residuals(const gsl_vector *p, void *params, gsl_vector *f)
{
  const auto &d = *static_cast<const FitData *>(params);
  const double phi = gsl_vector_get(p, 0);
  const double r = gsl_vector_get(p, 1);
  for (std::size_t t = 0; t < d.x.size(); ++t)
  {
    const double den = phi + r * d.x[t];
    gsl_vector_set(f, t, den > 0.0 ? d.x[t] / den - d.y[t] : 1e6);
  }
  return GSL_SUCCESS;
}

int ratio_jacobian(const gsl_vector *p, void *params, gsl_matrix *J)
{
  const auto &d = *static_cast<const FitData *>(params);
  const double phi = gsl_vector_get(p, 0);
  const double r = gsl_vector_get(p, 1);
  for (std::size_t t = 0; t < d.x.size(); ++t)
  {
    const double den = phi + r * d.x[t];
    const double inv2 = den > 0.0 ? 1.0 / (den * den) : 0.0;
    gsl_matrix_set(J, t, 0, -d.x[t] * inv2);
    gsl_matrix_set(J, t, 1, -d.x[t] * d.x[t] * inv2);
  }
  return GSL_SUCCESS;
}

bool polish_ratios(const FitData &d, double &phi, double &r)
{
  gsl_multifit_nlinear_fdf fdf;
  fdf.f = &ratio_residuals;
  fdf.df = &ratio_jacobian;
  fdf.fvv = nullptr;
  fdf.n = d.x.size();
  fdf.p = 2;
  fdf.params = const_cast<FitData *>(&d);

  gsl_multifit_nlinear_parameters settings = gsl_multifit_nlinear_default_parameters();
  std::unique_ptr<gsl_multifit_nlinear_workspace, NlinearDeleter> w(
      gsl_multifit_nlinear_alloc(gsl_multifit_nlinear_trust, &settings, d.x.size(), 2));
  if (!w)
  {
    return false;
  }
  Vector start = make_vector({phi, r});
  if (gsl_multifit_nlinear_init(start.get(), &fdf, w.get()) != GSL_SUCCESS)
  {
    return false;
  }
  int info = 0;
  gsl_multifit_nlinear_driver(500, 1e-15, 1e-15, 0.0, nullptr, nullptr, &info, w.get());
  const gsl_vector *x = gsl_multifit_nlinear_position(w.get());
  phi = gsl_vector_get(x, 0);
  r = gsl_vector_get(x, 1);
  return std::isfinite(phi) && std::isfinite(r);
}

// Largest scale <= a keeping (a, phi a, r a) inside the parameter box.
double admissible_scale(double a, double phi, double r)
{
  double s = std::min(a, a_max);
  if (phi > 0.0)
  {
    s = std::min(s, b_max / phi);
  }
  if (r < 0.0)
  {
    s = std::min(s, c_min / r);
  }
  else if (r > 0.0)
  {
    s = std::min(s, c_max / r);
  }
  return s;
}

void finish(FitResult &fit, const FitData &d)
{
  fit.phi = fit.b / fit.a;
  fit.relation_error = std::abs((fit.b + 2.0 * fit.c) / fit.a - 2.0);
  if (!std::isfinite(fit.relation_error))
  {
    fit.relation_error = std::numeric_limits<double>::infinity();
  }
  fit.reducible = fit.relation_error <= reduction_tolerance && fit.phi >= 0.0;
  double ss = 0.0;
  fit.exits_box = false;
  for (std::size_t t = 0; t < d.x.size(); ++t)
  {
    const double m = model_shape(fit, d.x[t]);
    ss += (m - d.y[t]) * (m - d.y[t]);
    if (m < -1e-9 || m > 1.0 + 1e-9 || !std::isfinite(m))
    {
      fit.exits_box = true;
    }
  }
  fit.rms_residual = std::sqrt(ss / static_cast<double>(d.x.size()));
}

FitData prepare(std::span<const double> etas, double eta_lo, double eta_hi, std::int64_t n_steps)
{
  if (n_steps < 1 || etas.size() != static_cast<std::size_t>(n_steps))
  {
    throw InvalidSpec("fit_parametric: sequence length must equal n_steps");
  }
  if (!(eta_hi > eta_lo))
  {
    throw InvalidSpec("fit_parametric: eta_hi must exceed eta_lo");
  }
  const double span = eta_hi - eta_lo;
  const double slack = 1e-9 * std::max(1.0, std::abs(eta_hi));
  FitData d;
  for (std::int64_t t = 1; t <= n_steps; ++t)
  {
    const double eta = etas[static_cast<std::size_t>(t - 1)];
    if (!(eta >= eta_lo - slack && eta <= eta_hi + slack))
    {
      throw InvalidSpec("fit_parametric: rate outside [eta_lo, eta_hi]");
    }
    d.x.push_back(phase_cosine(t, n_steps, false));
    d.y.push_back((eta - eta_lo) / span);
  }
  return d;
}

}  // namespace

FitResult fit_from_parameters(double a, double b, double c)
{
  if (a == 0.0)
  {
    throw InvalidSpec("fit_from_parameters: a must be non-zero");
  }
  FitResult fit;
  fit.a = a;
  fit.b = b;
  fit.c = c;
  fit.phi = b / a;
  fit.relation_error = std::abs((b + 2.0 * c) / a - 2.0);
  fit.reducible = fit.relation_error <= reduction_tolerance && fit.phi >= 0.0;
  fit.rms_residual = 0.0;
  return fit;
}

double model_shape(const FitResult &fit, double x)
{
  const double den = fit.b + fit.c * x;
  if (den == 0.0)
  {
    // b = 0 is the constant model a / c.
    return fit.b == 0.0 && fit.c != 0.0 ? fit.a / fit.c : std::numeric_limits<double>::quiet_NaN();
  }
  return fit.a * x / den;
}

FitResult fit_parametric(std::span<const double> etas_sorted_desc, double eta_lo, double eta_hi,
                         std::int64_t n_steps, std::uint64_t seed)
{
  const FitData d = prepare(etas_sorted_desc, eta_lo, eta_hi, n_steps);
  const auto [lo, hi] = std::minmax_element(d.y.begin(), d.y.end());

  FitResult fit;
  if (*hi - *lo <= 1e-14)
  {
    // Constant input: the b = 0 branch a x / (c x) reproduces it exactly.
    fit.a = *hi;
    fit.b = 0.0;
    fit.c = 1.0;
    fit.phi = 0.0;
    fit.relation_error = fit.a > 0.0 ? std::abs(2.0 / fit.a - 2.0)
                                     : std::numeric_limits<double>::infinity();
    fit.reducible = fit.relation_error <= reduction_tolerance;
    fit.rms_residual = 0.0;
    fit.exits_box = false;
    return fit;
  }

  gsl_set_error_handler_off();

  // Starting points: the cosine shape, then seeded draws spread over shapes.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Params> starts{{1.0, 2.0, 0.0, 0.0}};
  while (starts.size() < num_starts)
  {
    const double a = std::exp(std::log(0.05) + unit(rng) * std::log(400.0));
    const double phi = std::exp(std::log(0.02) + unit(rng) * std::log(2500.0));
    double r = 1.0 - 0.5 * phi + (unit(rng) - 0.5);
    if (phi + 2.0 * r <= 0.0)
    {
      r = 1.0 - 0.5 * phi;
    }
    const double s = admissible_scale(a, phi, r);
    starts.push_back({s, phi * s, r * s, 0.0});
  }

  std::vector<Params> results(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) {
    results[i] = run_simplex(d, starts[i].a, starts[i].b, starts[i].c);
  });
  Params best = results.front();
  for (const auto &r : results)
  {
    if (r.ss < best.ss)
    {
      best = r;
    }
  }

  double phi = best.b / best.a;
  double ratio_c = best.c / best.a;
  if (polish_ratios(d, phi, ratio_c) && phi > 0.0)
  {
    const double s = admissible_scale(best.a, phi, ratio_c);
    const double ss = sum_squares(d, s, phi * s, ratio_c * s);
    if (ss <= best.ss)
    {
      best = {s, phi * s, ratio_c * s, ss};
    }
  }

  fit.a = best.a;
  fit.b = best.b;
  fit.c = best.c;
  finish(fit, d);
  return fit;
}

FitResult fit_parametric_ascending(std::span<const double> etas_sorted_asc, double eta_lo,
                                   double eta_hi, std::int64_t n_steps, std::uint64_t seed)
{
  // The shifted model at index t equals the unshifted one at n + 1 - t.
  std::vector<double> reversed(etas_sorted_asc.rbegin(), etas_sorted_asc.rend());
  return fit_parametric(reversed, eta_lo, eta_hi, n_steps, seed);
}

Reduction reduce_to_uba(const FitResult &fit, double eta_lo, double eta_hi, std::int64_t n_steps)
{
  Reduction out;
  if (!(eta_hi > eta_lo) || n_steps < 1)
  {
    throw InvalidSpec("reduce_to_uba: invalid rate box or step count");
  }
  if (!(fit.relation_error <= reduction_tolerance))
  {
    out.reason = "relation error exceeds tolerance; reduction refused";
    return out;
  }
  if (!(fit.phi >= 0.0))
  {
    out.reason = "negative phi; reduction refused";
    return out;
  }
  out.accepted = true;
  out.spec = make_uba(n_steps, fit.phi, eta_hi, eta_lo);
  const RateTrace tr = trace(out.spec);
  double ss = 0.0;
  for (std::int64_t t = 1; t <= n_steps; ++t)
  {
    const double uba = (tr.at_step(t) - eta_lo) / (eta_hi - eta_lo);
    const double curve = model_shape(fit, phase_cosine(t, n_steps, false));
    ss += (uba - curve) * (uba - curve);
  }
  out.curve_rms = std::sqrt(ss / static_cast<double>(n_steps));
  return out;
}

ScheduleSpec ascending_variant(const ScheduleSpec &spec)
{
  ScheduleSpec out = spec;
  out.plan.phase_shift += 1;
  return out;
}

PipelineResult pipeline(const MinMaxProblem &problem, const SolverConfig &config)
{
  PipelineResult out;
  out.solution = solve_minmax(problem, config);
  const auto &sorted = out.solution.etas_sorted_desc;
  out.fit_eta_lo = std::clamp(1.0 / problem.lambda_hi, problem.eta_lo, problem.eta_hi);
  out.fit_eta_hi = std::clamp(1.0 / problem.lambda_lo, problem.eta_lo, problem.eta_hi);
  if (out.fit_eta_hi > out.fit_eta_lo)
  {
    out.fit = fit_parametric(sorted, out.fit_eta_lo, out.fit_eta_hi, problem.n_steps, config.seed);
    out.reduction = reduce_to_uba(out.fit, out.fit_eta_lo, out.fit_eta_hi, problem.n_steps);
  }
  else
  {
    // The box pins every step to one value.
    out.fit = fit_from_parameters(1.0, 0.0, 1.0);
    out.reduction.accepted = false;
    out.reduction.reason = "rate box pins every step; no range to fit";
  }
  return out;
}

}  // namespace uba
