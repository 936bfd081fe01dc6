// SPDX-License-Identifier: Apache-2.0

#include "uba/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "uba/error.hpp"

namespace uba
{

namespace
{

constexpr double pi = std::numbers::pi;

struct KindName
{
  ScheduleKind kind;
  std::string_view name;
};

constexpr KindName kind_names[] = {
    {ScheduleKind::UBA, "UBA"},           {ScheduleKind::Step, "Step"},
    {ScheduleKind::Cosine, "Cosine"},     {ScheduleKind::Cyclic, "Cyclic"},
    {ScheduleKind::OneCycle, "OneCycle"}, {ScheduleKind::LinearBT, "LinearBT"},
    {ScheduleKind::REX, "REX"},
};

struct TargetName
{
  MimicTarget target;
  std::string_view name;
};

constexpr TargetName target_names[] = {
    {MimicTarget::Cosine, "Cosine"}, {MimicTarget::Exponential, "Exponential"},
    {MimicTarget::REX, "REX"},       {MimicTarget::Step, "Step"},
    {MimicTarget::Cyclic, "Cyclic"}, {MimicTarget::OneCycle, "OneCycle"},
};

std::string indexed(const std::string &base, std::size_t i)
{
  return base + "/" + std::to_string(i);
}

// Step milestones (fractions of the budget) and the multiplicative factor that applies
// from each milestone on.
struct StepSegments
{
  std::vector<double> milestones;
  std::vector<double> factors;
};

StepSegments step_segments(const ScheduleSpec &spec)
{
  StepSegments seg;
  for (std::size_t k = 1;; ++k)
  {
    auto m = spec.baseline_params.find("milestone_" + std::to_string(k));
    if (m == spec.baseline_params.end())
    {
      break;
    }
    seg.milestones.push_back(m->second);
    seg.factors.push_back(spec.param("factor_" + std::to_string(k), std::pow(0.1, k)));
  }
  if (seg.milestones.empty())
  {
    seg.milestones = {0.5, 0.75};
    seg.factors = {0.1, 0.01};
  }
  return seg;
}

}  // namespace

std::string_view to_string(ScheduleKind kind)
{
  for (const auto &k : kind_names)
  {
    if (k.kind == kind)
    {
      return k.name;
    }
  }
  return "unknown";
}

std::optional<ScheduleKind> parse_schedule_kind(std::string_view name)
{
  for (const auto &k : kind_names)
  {
    if (k.name == name)
    {
      return k.kind;
    }
  }
  return std::nullopt;
}

std::string_view to_string(MimicTarget target)
{
  for (const auto &t : target_names)
  {
    if (t.target == target)
    {
      return t.name;
    }
  }
  return "unknown";
}

std::optional<MimicTarget> parse_mimic_target(std::string_view name)
{
  for (const auto &t : target_names)
  {
    if (t.name == name)
    {
      return t.target;
    }
  }
  return std::nullopt;
}

std::size_t PhasePlan::phase_of(std::int64_t t) const
{
  auto it = std::lower_bound(boundaries.begin() + 1, boundaries.end(), t);
  return static_cast<std::size_t>(it - boundaries.begin()) - 1;
}

std::vector<Diagnostic> PhasePlan::check(double eta_min) const
{
  std::vector<Diagnostic> out;
  if (boundaries.size() < 2)
  {
    out.push_back({"/plan/boundaries", "need at least two boundaries"});
  }
  else
  {
    if (boundaries.front() != 0)
    {
      out.push_back({"/plan/boundaries/0", "first boundary must be 0"});
    }
    if (std::adjacent_find(boundaries.begin(), boundaries.end(),
                           [](auto a, auto b) { return b <= a; }) != boundaries.end())
    {
      out.push_back({"/plan/boundaries", "boundaries must be strictly increasing"});
    }
  }
  const std::size_t phases = num_phases();
  if (phi.size() != phases)
  {
    out.push_back({"/plan/phi", "expected " + std::to_string(phases) + " entries, got " +
                                    std::to_string(phi.size())});
  }
  if (eta_max.size() != phases)
  {
    out.push_back({"/plan/eta_max", "expected " + std::to_string(phases) +
                                        " entries, got " + std::to_string(eta_max.size())});
  }
  for (std::size_t i = 0; i < phi.size(); ++i)
  {
    if (!(phi[i] >= 0.0) || !std::isfinite(phi[i]))
    {
      out.push_back({indexed("/plan/phi", i), "phi must be finite and non-negative"});
    }
  }
  for (std::size_t i = 0; i < eta_max.size(); ++i)
  {
    if (!(eta_max[i] > eta_min) || !std::isfinite(eta_max[i]))
    {
      out.push_back({indexed("/plan/eta_max", i), "eta_max must exceed eta_min"});
    }
  }
  if (phase_shift < 0)
  {
    out.push_back({"/plan/phase_shift", "phase_shift must be non-negative"});
  }
  return out;
}

double ScheduleSpec::param(const std::string &key, double fallback) const
{
  auto it = baseline_params.find(key);
  return it == baseline_params.end() ? fallback : it->second;
}

std::int64_t ScheduleSpec::warmup_steps() const
{
  return static_cast<std::int64_t>(
      std::floor(warmup_fraction * static_cast<double>(total_steps) + 1e-9));
}

bool ScheduleSpec::has_intrinsic_ramp() const
{
  switch (kind)
  {
    case ScheduleKind::Cyclic:
    case ScheduleKind::OneCycle:
      return true;
    case ScheduleKind::UBA:
      return !plan.boundaries.empty() && plan.ascending(0);
    default:
      return false;
  }
}

double ScheduleSpec::peak_rate() const
{
  if (kind == ScheduleKind::UBA)
  {
    return plan.eta_max.empty() ? eta_min
                                : *std::max_element(plan.eta_max.begin(), plan.eta_max.end());
  }
  double peak = std::max(eta0(), eta_min);
  if (kind == ScheduleKind::Step)
  {
    for (double f : step_segments(*this).factors)
    {
      peak = std::max(peak, eta0() * f);
    }
  }
  return peak;
}

std::vector<Diagnostic> ScheduleSpec::check() const
{
  std::vector<Diagnostic> out;
  if (total_steps <= 0)
  {
    out.push_back({"/total_steps", "total_steps must be positive"});
  }
  if (!(eta_min >= 0.0) || !std::isfinite(eta_min))
  {
    out.push_back({"/eta_min", "eta_min must be finite and non-negative"});
  }
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0))
  {
    out.push_back({"/warmup_fraction", "warmup_fraction must lie in [0, 1)"});
  }
  if (kind == ScheduleKind::UBA)
  {
    auto plan_diags = plan.check(eta_min);
    out.insert(out.end(), plan_diags.begin(), plan_diags.end());
    if (plan.boundaries.size() >= 2 && total_steps > 0 && plan.final_boundary() != total_steps)
    {
      out.push_back({"/plan/boundaries", "final boundary must equal total_steps"});
    }
    return out;
  }

  for (const auto &[key, value] : baseline_params)
  {
    if (!std::isfinite(value))
    {
      out.push_back({"/baseline_params/" + key, "value must be finite"});
    }
  }
  if (!(eta0() > 0.0) || eta0() < eta_min)
  {
    out.push_back({"/baseline_params/eta0", "eta0 must be positive and at least eta_min"});
  }
  if (kind == ScheduleKind::Cyclic && !(param("cycles", 2.0) >= 1.0))
  {
    out.push_back({"/baseline_params/cycles", "cycles must be at least 1"});
  }
  if (kind == ScheduleKind::OneCycle)
  {
    double pct = param("pct_start", 0.3);
    if (!(pct > 0.0 && pct < 1.0))
    {
      out.push_back({"/baseline_params/pct_start", "pct_start must lie in (0, 1)"});
    }
  }
  if (kind == ScheduleKind::Step)
  {
    auto seg = step_segments(*this);
    for (std::size_t k = 0; k < seg.milestones.size(); ++k)
    {
      const double m = seg.milestones[k];
      if (!(m > 0.0 && m <= 1.0) || (k > 0 && m <= seg.milestones[k - 1]))
      {
        out.push_back({"/baseline_params/milestone_" + std::to_string(k + 1),
                       "milestones must be increasing fractions in (0, 1]"});
      }
      if (!(seg.factors[k] >= 0.0))
      {
        out.push_back({"/baseline_params/factor_" + std::to_string(k + 1),
                       "factors must be non-negative"});
      }
    }
  }
  return out;
}

void raise_if_any(std::string_view what, const std::vector<Diagnostic> &diags)
{
  if (diags.empty())
  {
    return;
  }
  std::ostringstream msg;
  msg << what << ":";
  for (const auto &d : diags)
  {
    msg << " [" << d.path << "] " << d.message << ";";
  }
  throw InvalidSpec(msg.str());
}

void ScheduleSpec::validate() const { raise_if_any("invalid schedule", check()); }

double uba_shape(double x, double phi)
{
  const double num = 2.0 * x;
  const double den = 2.0 * phi + (2.0 - phi) * x;
  if (den <= 0.0)
  {
    // phi = 0 at x = 0: continuous extension of the constant branch.
    return 1.0;
  }
  return std::clamp(num / den, 0.0, 1.0);
}

double phase_cosine(std::int64_t j, std::int64_t n, bool ascending)
{
  // Odd multiple m = 2j - 1 of pi / (2n); the ascending branch equals the descending
  // branch at the mirrored multiple 2n - m.
  std::int64_t m = 2 * j - 1;
  if (ascending)
  {
    m = 2 * n - m;
  }
  const double c = std::cos(static_cast<double>(m) * pi / (4.0 * static_cast<double>(n)));
  return 2.0 * c * c;
}

double uba_rate(std::int64_t t, const PhasePlan &plan, double eta_min)
{
  if (plan.boundaries.size() < 2 || plan.phi.size() != plan.num_phases() ||
      plan.eta_max.size() != plan.num_phases())
  {
    throw InvalidSpec("uba_rate: malformed phase plan");
  }
  if (t < 1 || t > plan.final_boundary())
  {
    throw OutOfRange("uba_rate: iteration " + std::to_string(t) + " outside [1, " +
                     std::to_string(plan.final_boundary()) + "]");
  }
  const std::size_t k = plan.phase_of(t);
  const double phi = plan.phi[k];
  if (!(phi >= 0.0))
  {
    throw InvalidSpec("uba_rate: phi must be non-negative");
  }
  const std::int64_t start = plan.boundaries[k];
  const std::int64_t n = plan.boundaries[k + 1] - start;
  const double x = phase_cosine(t - start, n, plan.ascending(k));
  return (plan.eta_max[k] - eta_min) * uba_shape(x, phi) + eta_min;
}

double baseline_rate(const ScheduleSpec &spec, double t)
{
  const double T = static_cast<double>(spec.total_steps);
  if (spec.total_steps <= 0)
  {
    throw InvalidSpec("baseline_rate: total_steps must be positive");
  }
  if (!(t >= 0.0 && t <= T))
  {
    throw OutOfRange("baseline_rate: time outside [0, T]");
  }
  const double eta0 = spec.eta0();
  const double eta_min = spec.eta_min;
  const double remaining = 1.0 - t / T;
  switch (spec.kind)
  {
    case ScheduleKind::Step:
    {
      auto seg = step_segments(spec);
      double factor = 1.0;
      for (std::size_t k = 0; k < seg.milestones.size(); ++k)
      {
        if (t + 1e-9 * std::max(1.0, T) >= seg.milestones[k] * T)
        {
          factor = seg.factors[k];
        }
      }
      return eta0 * factor;
    }
    case ScheduleKind::Cosine:
      return eta_min + 0.5 * (eta0 - eta_min) * (1.0 + std::cos(t * pi / T));
    case ScheduleKind::LinearBT:
      return eta0 * remaining;
    case ScheduleKind::REX:
      return eta0 * (remaining / (0.5 + 0.5 * remaining));
    case ScheduleKind::Cyclic:
    {
      // Triangular policy: base -> peak -> base once per period.
      const double period = T / spec.param("cycles", 2.0);
      const double frac = std::fmod(t, period) / period;
      const double tri = 1.0 - std::abs(2.0 * frac - 1.0);
      return eta_min + (eta0 - eta_min) * tri;
    }
    case ScheduleKind::OneCycle:
    {
      const double up = spec.param("pct_start", 0.3) * T;
      const double s = t <= up ? t / up : (T - t) / (T - up);
      return eta_min + (eta0 - eta_min) * s;
    }
    case ScheduleKind::UBA:
      break;
  }
  throw InvalidSpec("baseline_rate: not a baseline schedule kind");
}

RateTrace trace(const ScheduleSpec &spec)
{
  spec.validate();
  const auto T = spec.total_steps;
  RateTrace out;
  out.rates.resize(static_cast<std::size_t>(T));

  auto base = [&](std::int64_t step) {
    return spec.kind == ScheduleKind::UBA ? uba_rate(step, spec.plan, spec.eta_min)
                                          : baseline_rate(spec, static_cast<double>(step - 1));
  };
  for (std::int64_t s = 1; s <= T; ++s)
  {
    out.rates[static_cast<std::size_t>(s - 1)] = base(s);
  }

  const std::int64_t warm = spec.has_intrinsic_ramp() ? 0 : spec.warmup_steps();
  if (warm > 0)
  {
    const double target = out.rates[static_cast<std::size_t>(warm - 1)];
    for (std::int64_t s = 1; s <= warm; ++s)
    {
      out.rates[static_cast<std::size_t>(s - 1)] =
          target * static_cast<double>(s) / static_cast<double>(warm);
    }
  }
  return out;
}

ScheduleSpec make_uba(std::int64_t n, double phi, double eta_max, double eta_min)
{
  ScheduleSpec spec;
  spec.kind = ScheduleKind::UBA;
  spec.eta_min = eta_min;
  spec.total_steps = n;
  spec.plan.boundaries = {0, n};
  spec.plan.phi = {phi};
  spec.plan.eta_max = {eta_max};
  return spec;
}

std::vector<double> decayed_phis(double phi0, std::size_t phases, double rho)
{
  std::vector<double> out(phases);
  for (std::size_t k = 0; k < phases; ++k)
  {
    out[k] = phi0 * std::pow(rho, static_cast<double>(k));
  }
  return out;
}

namespace
{

// Equal-length segments covering [0, T]; the last absorbs the remainder.
std::vector<std::int64_t> equal_boundaries(std::int64_t T, std::int64_t parts)
{
  if (parts < 1 || parts > T)
  {
    throw InvalidSpec("mimic: cannot split " + std::to_string(T) + " steps into " +
                      std::to_string(parts) + " phases");
  }
  std::vector<std::int64_t> b(static_cast<std::size_t>(parts) + 1);
  for (std::int64_t k = 0; k <= parts; ++k)
  {
    b[static_cast<std::size_t>(k)] = k * T / parts;
  }
  return b;
}

}  // namespace

ScheduleSpec mimic(MimicTarget target, const MimicOptions &opt)
{
  if (opt.total_steps <= 0)
  {
    throw InvalidSpec("mimic: total_steps must be positive");
  }
  const auto T = opt.total_steps;
  auto single = [&](double phi) {
    ScheduleSpec s = make_uba(T, phi, opt.eta_max, opt.eta_min);
    s.warmup_fraction = opt.warmup_fraction;
    return s;
  };

  switch (target)
  {
    case MimicTarget::Cosine:
      return single(2.0);
    case MimicTarget::Exponential:
      return single(30.0);
    case MimicTarget::REX:
      return single(0.8);
    case MimicTarget::Step:
    {
      ScheduleSpec s = single(0.0);
      s.plan.boundaries = equal_boundaries(T, opt.step_segments);
      s.plan.phi.assign(static_cast<std::size_t>(opt.step_segments), 0.0);
      s.plan.eta_max.clear();
      for (int k = 1; k <= opt.step_segments; ++k)
      {
        s.plan.eta_max.push_back(opt.eta_max * std::pow(0.5, k));
      }
      return s;
    }
    case MimicTarget::Cyclic:
    {
      ScheduleSpec s = single(2.0);
      s.plan.boundaries = equal_boundaries(T, 2 * static_cast<std::int64_t>(opt.cycles));
      s.plan.phi.assign(s.plan.num_phases(), 2.0);
      s.plan.eta_max.assign(s.plan.num_phases(), opt.eta_max);
      s.plan.phase_shift = 1;
      return s;
    }
    case MimicTarget::OneCycle:
    {
      ScheduleSpec s = single(2.0);
      const auto up = std::clamp<std::int64_t>(
          static_cast<std::int64_t>(std::llround(opt.pct_start * static_cast<double>(T))), 1,
          T - 1);
      s.plan.boundaries = {0, up, T};
      s.plan.phi = {2.0, 2.0};
      s.plan.eta_max = {opt.eta_max, opt.eta_max};
      s.plan.phase_shift = 1;
      return s;
    }
  }
  throw InvalidSpec("mimic: unknown target");
}

ScheduleSpec step_baseline_for(const MimicOptions &opt)
{
  const ScheduleSpec uba = mimic(MimicTarget::Step, opt);
  ScheduleSpec s;
  s.kind = ScheduleKind::Step;
  s.eta_min = opt.eta_min;
  s.total_steps = opt.total_steps;
  s.warmup_fraction = opt.warmup_fraction;
  s.baseline_params["eta0"] = uba.plan.eta_max[0];
  const double T = static_cast<double>(opt.total_steps);
  for (std::size_t k = 1; k < uba.plan.num_phases(); ++k)
  {
    s.baseline_params["milestone_" + std::to_string(k)] =
        static_cast<double>(uba.plan.boundaries[k]) / T;
    s.baseline_params["factor_" + std::to_string(k)] = std::pow(0.5, static_cast<double>(k));
  }
  if (uba.plan.num_phases() == 1)
  {
    // A single segment: keep the defaults from kicking in.
    s.baseline_params["milestone_1"] = 1.0;
    s.baseline_params["factor_1"] = 1.0;
  }
  return s;
}

}  // namespace uba
