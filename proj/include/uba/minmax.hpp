// SPDX-License-Identifier: Apache-2.0

#ifndef UBA_MINMAX_HPP
#define UBA_MINMAX_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "uba/schedule.hpp"

namespace uba
{

//
// Schedule design over one phase: choose n step sizes in [eta_lo, eta_hi] minimizing
// the worst contraction max_{lambda in [lambda_lo, lambda_hi]} prod_t (1 - eta_t lambda)^2.
//
struct MinMaxProblem
{
  std::int64_t n_steps = 1;
  double lambda_lo = 1.0;
  double lambda_hi = 1.0;
  double eta_lo = 0.0;
  double eta_hi = 1.0;

  std::vector<Diagnostic> check() const;
  void validate() const;
};

struct MinMaxSolution
{
  std::vector<double> etas;              // as solved (order carries no meaning)
  std::vector<double> etas_sorted_desc;  // same values, largest first
  double worst_lambda = 0.0;
  double log_objective = 0.0;  // ln max_lambda prod (1 - eta_t lambda)^2
  bool converged = false;
  std::int64_t iterations_used = 0;
};

struct SolverConfig
{
  // Outer iterations per cycle. Each cycle restarts from the best point found so far
  // with the step size scaled by alpha_decay.
  int outer_iterations = 300;
  int cycles = 4;
  double alpha = 0.1;  // initial step, as a fraction of eta_hi - eta_lo
  double alpha_decay = 0.3;
  int lambda_grid = 4096;
  double tolerance = 1e-10;
  int restarts = 8;
  std::uint64_t seed = 0;

  std::vector<Diagnostic> check() const;
};

struct WorstCase
{
  double lambda = 0.0;
  double log_objective = 0.0;
};

// sum_t 2 ln|1 - eta_t lambda|; -inf when some factor vanishes.
double log_contraction(std::span<const double> etas, double lambda);

// Global maximizer of log_contraction over [lambda_lo, lambda_hi]: dense grid scan, then
// golden-section refinement of every grid peak and both endpoints. Ties go to the
// lowest lambda.
WorstCase worst_case_objective(std::span<const double> etas, double lambda_lo, double lambda_hi,
                               int grid_points = 4096);

// Alternating projected (sub)gradient solver with seeded multi-start. The search runs on
// the box intersected with [1 / lambda_hi, 1 / lambda_lo]; each restart is finished by
// a Newton iteration that equalizes the interior peaks of the objective. converged is
// set when the subgradient stalls in its last cycle or the peaks end up equal.
MinMaxSolution solve_minmax(const MinMaxProblem &problem, const SolverConfig &config = {});

// Reciprocals of the Chebyshev roots mapped into [lambda_lo, lambda_hi], largest first.
std::vector<double> chebyshev_steps(std::int64_t n, double lambda_lo, double lambda_hi);

// -2 ln C_n(d), d = (lambda_lo + lambda_hi) / (lambda_hi - lambda_lo): the optimal value
// of the unconstrained design problem.
double chebyshev_objective(std::int64_t n, double lambda_lo, double lambda_hi);

// UBA with phi = 2 lambda_hi / lambda_lo on [0, 1], mapped affinely onto
// [1 / lambda_hi, 1 / lambda_lo].
std::vector<double> scaled_uba_steps(std::int64_t n, double lambda_lo, double lambda_hi);

}  // namespace uba

#endif  // UBA_MINMAX_HPP
