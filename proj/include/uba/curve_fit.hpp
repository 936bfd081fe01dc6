// SPDX-License-Identifier: Apache-2.0

#ifndef UBA_CURVE_FIT_HPP
#define UBA_CURVE_FIT_HPP

#include <cstdint>
#include <span>
#include <string>

#include "uba/minmax.hpp"
#include "uba/schedule.hpp"

namespace uba
{

//
// Three-parameter rational-cosine model of a sorted step sequence,
//
//   eta_t = (eta_hi - eta_lo) * a x_t / (b + c x_t) + eta_lo,  x_t = 1 + cos((2t - 1) pi / 2n).
//
// The model only depends on b / a and c / a, so (a, b, c) is defined up to a common
// scale; phi = b / a and the relation (b + 2c) / a are scale free.
//
struct FitResult
{
  double a = 1.0;
  double b = 2.0;
  double c = 0.0;
  double phi = 2.0;
  double rms_residual = 0.0;    // on rates normalized by eta_hi - eta_lo
  double relation_error = 0.0;  // |(b + 2c) / a - 2|
  bool reducible = true;        // relation_error within reduction_tolerance
  bool exits_box = false;       // fitted curve leaves [eta_lo, eta_hi] on the data grid
};

inline constexpr double reduction_tolerance = 0.2;

// Builds a FitResult from given parameters (rms_residual left at 0).
FitResult fit_from_parameters(double a, double b, double c);

// Normalized model value a x / (b + c x).
double model_shape(const FitResult &fit, double x);

// Least-squares fit to a descending sequence of n_steps rates in [eta_lo, eta_hi]:
// seeded multi-start Nelder-Mead over (a, b, c), then a Levenberg-Marquardt polish of
// the scale-free ratios.
FitResult fit_parametric(std::span<const double> etas_sorted_desc, double eta_lo, double eta_hi,
                         std::int64_t n_steps, std::uint64_t seed = 0);

// Same fit for an ascending sequence, against the pi-shifted model.
FitResult fit_parametric_ascending(std::span<const double> etas_sorted_asc, double eta_lo,
                                   double eta_hi, std::int64_t n_steps, std::uint64_t seed = 0);

struct Reduction
{
  bool accepted = false;
  ScheduleSpec spec;       // single-phase UBA with phi = b / a (when accepted)
  double curve_rms = 0.0;  // normalized RMS gap between spec trace and fitted curve
  std::string reason;
};

Reduction reduce_to_uba(const FitResult &fit, double eta_lo, double eta_hi, std::int64_t n_steps);

// The same schedule run on the rising branch; its trace is the reverse of the input's.
ScheduleSpec ascending_variant(const ScheduleSpec &spec);

struct PipelineResult
{
  MinMaxSolution solution;
  // Normalization range of the fit: the rate box intersected with
  // [1 / lambda_hi, 1 / lambda_lo], where every solved step lies.
  double fit_eta_lo = 0.0;
  double fit_eta_hi = 0.0;
  FitResult fit;
  Reduction reduction;
};

// Solve, sort descending, fit on the normalization range, reduce to phi.
PipelineResult pipeline(const MinMaxProblem &problem, const SolverConfig &config = {});

}  // namespace uba

#endif  // UBA_CURVE_FIT_HPP
