// SPDX-License-Identifier: Apache-2.0

#ifndef UBA_SCHEDULE_HPP
#define UBA_SCHEDULE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace uba
{

// One invariant violation, addressed by a JSON pointer into the document form.
struct Diagnostic
{
  std::string path;
  std::string message;

  bool operator==(const Diagnostic &) const = default;
};

// Throws InvalidSpec naming every diagnostic, when there are any.
void raise_if_any(std::string_view what, const std::vector<Diagnostic> &diags);

enum class ScheduleKind
{
  UBA,
  Step,
  Cosine,
  Cyclic,
  OneCycle,
  LinearBT,
  REX
};

std::string_view to_string(ScheduleKind kind);
std::optional<ScheduleKind> parse_schedule_kind(std::string_view name);

//
// Phase layout of a UBA schedule. Phase k (1-based) covers the iterations
// (boundaries[k-1], boundaries[k]] and runs one rational-cosine segment with its
// own shape parameter phi[k-1] and peak rate eta_max[k-1].
//
// Odd phases descend and even phases ascend. A non-zero phase_shift adds that many
// half periods to every phase, so phase_shift = 1 starts the plan on an ascending
// segment (used by the Cyclic and OneCycle mimics).
//
struct PhasePlan
{
  std::vector<std::int64_t> boundaries;
  std::vector<double> phi;
  std::vector<double> eta_max;
  int phase_shift = 0;

  std::size_t num_phases() const { return boundaries.empty() ? 0 : boundaries.size() - 1; }
  std::int64_t final_boundary() const { return boundaries.empty() ? 0 : boundaries.back(); }

  // Index (0-based) of the phase containing iteration t, t in [1, final_boundary()].
  std::size_t phase_of(std::int64_t t) const;
  bool ascending(std::size_t phase) const { return (phase + phase_shift) % 2 == 1; }

  std::vector<Diagnostic> check(double eta_min) const;
};

struct ScheduleSpec
{
  ScheduleKind kind = ScheduleKind::UBA;
  double eta_min = 0.0;
  PhasePlan plan;
  std::map<std::string, double> baseline_params;
  double warmup_fraction = 0.0;
  std::int64_t total_steps = 0;

  double param(const std::string &key, double fallback) const;

  // Peak initial rate of a baseline schedule ("eta0", default 1).
  double eta0() const { return param("eta0", 1.0); }

  // Number of warmup steps, floor(warmup_fraction * total_steps).
  std::int64_t warmup_steps() const;

  // True for schedules that ramp up on their own and therefore skip warmup.
  bool has_intrinsic_ramp() const;

  // Maximum rate any iteration can take.
  double peak_rate() const;

  std::vector<Diagnostic> check() const;
  void validate() const;  // throws InvalidSpec listing every violation
};

struct RateTrace
{
  std::vector<double> rates;  // rates[i] is the rate of iteration i + 1

  std::size_t size() const { return rates.size(); }
  double at_step(std::int64_t t) const { return rates.at(static_cast<std::size_t>(t - 1)); }
};

// Normalized shape factor 2x / (2 phi + (2 - phi) x) in [0, 1], with x = 1 + cos(theta).
double uba_shape(double x, double phi);

// 1 + cos((2j - 1) pi / (2n)), j in [1, n], evaluated as 2 cos^2(.) for accuracy near
// x = 0. ascending selects the pi-shifted branch, computed as the mirrored index so a
// descending and an ascending phase are exact reverses of each other.
double phase_cosine(std::int64_t j, std::int64_t n, bool ascending);

// UBA rate at iteration t in [1, plan.final_boundary()].
double uba_rate(std::int64_t t, const PhasePlan &plan, double eta_min);

// Rate of a baseline schedule at (0-based, possibly fractional) time t in [0, T].
double baseline_rate(const ScheduleSpec &spec, double t);

// Full per-iteration trace, with linear warmup applied where the schedule has no ramp
// of its own.
RateTrace trace(const ScheduleSpec &spec);

// Single-phase UBA schedule over n steps.
ScheduleSpec make_uba(std::int64_t n, double phi, double eta_max, double eta_min = 0.0);

// phi_k = phi0 * rho^k for k = 0 .. phases - 1.
std::vector<double> decayed_phis(double phi0, std::size_t phases, double rho = 0.8);

enum class MimicTarget
{
  Cosine,
  Exponential,
  REX,
  Step,
  Cyclic,
  OneCycle
};

std::string_view to_string(MimicTarget target);
std::optional<MimicTarget> parse_mimic_target(std::string_view name);

struct MimicOptions
{
  std::int64_t total_steps = 100;
  double eta_max = 1.0;
  double eta_min = 0.0;
  double warmup_fraction = 0.0;
  int step_segments = 2;   // Step: number of decaying constant segments
  int cycles = 2;          // Cyclic: number of up/down periods
  double pct_start = 0.3;  // OneCycle: fraction of the budget spent ascending
};

// UBA parameterization that reproduces an existing schedule family.
ScheduleSpec mimic(MimicTarget target, const MimicOptions &options = {});

// Step baseline with the same segments and levels as mimic(Step, options), for
// comparing the two traces.
ScheduleSpec step_baseline_for(const MimicOptions &options);

}  // namespace uba

#endif  // UBA_SCHEDULE_HPP
