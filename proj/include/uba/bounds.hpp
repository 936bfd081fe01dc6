// SPDX-License-Identifier: Apache-2.0

#ifndef UBA_BOUNDS_HPP
#define UBA_BOUNDS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "uba/schedule.hpp"

namespace uba
{

//
// Upper bounds on the one-phase contraction products of a descending UBA phase and on
// the resulting bias / variance loss gaps. The bounds have separate branches for
// phi > 2 and phi < 2 and are undefined near phi = 2.
//
struct BoundInputs
{
  std::int64_t n = 1;  // phase length
  double phi = 4.0;
  double eta_lo = 0.0;
  double eta_hi = 1.0;
  double lambda_lo = 1.0;
  double lambda_hi = 1.0;
  std::int64_t t_rel = 1;  // iteration within the phase, [1, n]
  double sigma = 0.0;
  std::vector<double> spectrum{1.0};
  double init_dist_sq = 0.0;

  std::vector<Diagnostic> check() const;
  void validate() const;
};

inline constexpr double phi_exclusion = 1e-6;

// Which eigenvalue enters the exponent. Lower uses lambda_lo in both branches;
// AsPrinted keeps the evaluated eigenvalue in the phi < 2 branch.
enum class ExponentLambda
{
  Lower,
  AsPrinted
};

// 4 lambda (eta_hi - eta_lo)(1 + cos theta_t) n / ((phi - 2) pi), at t = t_rel.
// Negative for phi < 2; the bounds raise their base to |tau|.
double tau(const BoundInputs &in, double lambda);

// Log of the bound on prod_{j <= t_rel} (1 - eta_j lambda)^2.
double log_lemma1_bound(const BoundInputs &in, double lambda,
                        ExponentLambda exponent = ExponentLambda::Lower);
double lemma1_bound(const BoundInputs &in, double lambda,
                    ExponentLambda exponent = ExponentLambda::Lower);

// sum_t 2 ln|1 - eta_t lambda|.
double exact_product(std::span<const double> etas, double lambda);

// Rates of the descending phase the bounds describe.
std::vector<double> phase_rates(const BoundInputs &in);

struct GapBound
{
  double bias = 0.0;
  double variance = 0.0;
};

GapBound theorem1_bound(const BoundInputs &in, ExponentLambda exponent = ExponentLambda::Lower);

struct SweepRow
{
  double phi = 0.0;
  std::int64_t n = 0;
  double lambda = 0.0;
  std::int64_t t_rel = 0;
  double log_exact = 0.0;
  double log_bound = 0.0;
  double margin = 0.0;  // log_bound - log_exact
};

struct SweepConfig
{
  std::vector<double> phis{0.5, 1.0, 3.0, 5.0, 10.0};
  std::vector<std::int64_t> lengths{10, 100};
  int lambda_points = 33;
  double eta_lo = 0.0;
  double eta_hi = 1.0;
  double lambda_lo = 0.1;
  double lambda_hi = 1.0;
  ExponentLambda exponent = ExponentLambda::Lower;

  std::vector<Diagnostic> check() const;
};

// Every (phi, n, lambda, t_rel) combination, lambda evenly spaced over the box.
std::vector<SweepRow> bound_sweep(const SweepConfig &config);

}  // namespace uba

#endif  // UBA_BOUNDS_HPP
