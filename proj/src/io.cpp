// SPDX-License-Identifier: Apache-2.0

#include "uba/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "uba/error.hpp"

namespace uba::io
{

namespace
{

// Collects typed fields from one JSON object and reports problems as diagnostics.
class Fields
{
public:
  Fields(const json &doc, std::string path, std::vector<Diagnostic> &diags)
      : doc_(doc), path_(std::move(path)), diags_(diags)
  {
    ok_ = doc_.is_object();
    if (!ok_)
    {
      diags_.push_back({path_.empty() ? "" : path_, "expected an object"});
    }
  }

  bool ok() const { return ok_; }

  std::string at(const std::string &key) const { return path_ + "/" + key; }

  const json *find(const std::string &key)
  {
    seen_.insert(key);
    if (!ok_)
    {
      return nullptr;
    }
    auto it = doc_.find(key);
    if (it == doc_.end() || it->is_null())
    {
      return nullptr;
    }
    return &*it;
  }

  bool present(const std::string &key, bool required)
  {
    const json *v = find(key);
    if (!v && required && ok_)
    {
      diags_.push_back({at(key), "required field is missing"});
    }
    return v != nullptr;
  }

  void get(const std::string &key, double &out, bool required = false)
  {
    if (!present(key, required))
    {
      return;
    }
    const json &v = *find(key);
    if (!v.is_number())
    {
      diags_.push_back({at(key), "expected a number"});
      return;
    }
    out = v.get<double>();
  }

  template <typename Int>
    requires std::is_integral_v<Int>
  void get(const std::string &key, Int &out, bool required = false)
  {
    if (!present(key, required))
    {
      return;
    }
    const json &v = *find(key);
    if (!integral(v))
    {
      diags_.push_back({at(key), "expected an integer"});
      return;
    }
    out = to_int<Int>(v);
  }

  void get(const std::string &key, bool &out, bool required = false)
  {
    if (!present(key, required))
    {
      return;
    }
    const json &v = *find(key);
    if (!v.is_boolean())
    {
      diags_.push_back({at(key), "expected a boolean"});
      return;
    }
    out = v.get<bool>();
  }

  void get(const std::string &key, std::string &out, bool required = false)
  {
    if (!present(key, required))
    {
      return;
    }
    const json &v = *find(key);
    if (!v.is_string())
    {
      diags_.push_back({at(key), "expected a string"});
      return;
    }
    out = v.get<std::string>();
  }

  void get(const std::string &key, std::vector<double> &out, bool required = false)
  {
    if (!present(key, required))
    {
      return;
    }
    const json &v = *find(key);
    if (!v.is_array())
    {
      diags_.push_back({at(key), "expected an array of numbers"});
      return;
    }
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i)
    {
      if (!v[i].is_number())
      {
        diags_.push_back({at(key) + "/" + std::to_string(i), "expected a number"});
        continue;
      }
      out.push_back(v[i].get<double>());
    }
  }

  void get(const std::string &key, std::vector<std::int64_t> &out, bool required = false)
  {
    if (!present(key, required))
    {
      return;
    }
    const json &v = *find(key);
    if (!v.is_array())
    {
      diags_.push_back({at(key), "expected an array of integers"});
      return;
    }
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i)
    {
      if (!integral(v[i]))
      {
        diags_.push_back({at(key) + "/" + std::to_string(i), "expected an integer"});
        continue;
      }
      out.push_back(to_int<std::int64_t>(v[i]));
    }
  }

  void get(const std::string &key, std::map<std::string, double> &out, bool required = false)
  {
    if (!present(key, required))
    {
      return;
    }
    const json &v = *find(key);
    if (!v.is_object())
    {
      diags_.push_back({at(key), "expected an object of numbers"});
      return;
    }
    out.clear();
    for (auto it = v.begin(); it != v.end(); ++it)
    {
      if (!it->is_number())
      {
        diags_.push_back({at(key) + "/" + it.key(), "expected a number"});
        continue;
      }
      out[it.key()] = it->get<double>();
    }
  }

  // Flags keys that no getter asked for.
  void finish()
  {
    if (!ok_)
    {
      return;
    }
    for (auto it = doc_.begin(); it != doc_.end(); ++it)
    {
      if (!seen_.count(it.key()))
      {
        diags_.push_back({at(it.key()), "unknown field"});
      }
    }
  }

private:
  static bool integral(const json &v)
  {
    if (v.is_number_integer())
    {
      return true;
    }
    if (v.is_number_float())
    {
      const double d = v.get<double>();
      return std::isfinite(d) && std::floor(d) == d && std::abs(d) < 9e15;
    }
    return false;
  }

  template <typename Int>
  static Int to_int(const json &v)
  {
    if (v.is_number_float())
    {
      return static_cast<Int>(v.get<double>());
    }
    if (v.is_number_unsigned())
    {
      return static_cast<Int>(v.get<std::uint64_t>());
    }
    return static_cast<Int>(v.get<std::int64_t>());
  }

  const json &doc_;
  std::string path_;
  std::vector<Diagnostic> &diags_;
  std::set<std::string> seen_;
  bool ok_ = false;
};

void prefix(std::vector<Diagnostic> &diags, std::size_t from, const std::string &base)
{
  for (std::size_t i = from; i < diags.size(); ++i)
  {
    diags[i].path = base + diags[i].path;
  }
}

// Reads a spec document without checking invariants.
ScheduleSpec read_spec(const json &doc, const std::string &base, std::vector<Diagnostic> &diags)
{
  ScheduleSpec spec;
  Fields f(doc, base, diags);
  if (!f.ok())
  {
    return spec;
  }
  std::string kind;
  f.get("kind", kind, true);
  if (f.find("kind") && !kind.empty())
  {
    if (auto k = parse_schedule_kind(kind))
    {
      spec.kind = *k;
    }
    else
    {
      diags.push_back({f.at("kind"), "unknown schedule kind '" + kind + "'"});
    }
  }
  f.get("eta_min", spec.eta_min);
  f.get("total_steps", spec.total_steps, true);
  f.get("warmup_fraction", spec.warmup_fraction);
  f.get("baseline_params", spec.baseline_params);

  const bool uba = spec.kind == ScheduleKind::UBA;
  if (f.present("plan", uba))
  {
    Fields p(*f.find("plan"), f.at("plan"), diags);
    p.get("boundaries", spec.plan.boundaries, true);
    p.get("phi", spec.plan.phi, true);
    p.get("eta_max", spec.plan.eta_max, true);
    p.get("phase_shift", spec.plan.phase_shift);
    p.finish();
  }
  f.finish();
  return spec;
}

std::string csv_text(const std::vector<std::vector<std::string>> &rows)
{
  std::string out;
  for (const auto &row : rows)
  {
    for (std::size_t i = 0; i < row.size(); ++i)
    {
      if (i)
      {
        out += ',';
      }
      out += row[i];
    }
    out += '\n';
  }
  return out;
}

}  // namespace

json parse(std::string_view text)
{
  try
  {
    return json::parse(text.begin(), text.end());
  }
  catch (const json::parse_error &e)
  {
    // e.byte is the 1-based offset of the offending character.
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < end; ++i)
    {
      if (text[i] == '\n')
      {
        ++line;
        column = 1;
      }
      else
      {
        ++column;
      }
    }
    throw ParseError(e.what(), line, column);
  }
}

std::string format_number(double x)
{
  if (std::isnan(x))
  {
    return "nan";
  }
  if (std::isinf(x))
  {
    return x > 0 ? "inf" : "-inf";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

json number(double x)
{
  if (!std::isfinite(x))
  {
    return format_number(x);
  }
  return std::stod(format_number(x));
}

std::vector<Diagnostic> check_spec(const json &doc, const std::string &base)
{
  std::vector<Diagnostic> diags;
  ScheduleSpec spec = read_spec(doc, base, diags);
  // Unknown keys leave the parsed spec intact, so its invariants can still be checked.
  const bool intact = std::all_of(diags.begin(), diags.end(),
                                  [](const Diagnostic &d) { return d.message == "unknown field"; });
  if (intact)
  {
    const std::size_t from = diags.size();
    auto inv = spec.check();
    diags.insert(diags.end(), inv.begin(), inv.end());
    prefix(diags, from, base);
  }
  return diags;
}

ScheduleSpec spec_from_json(const json &doc)
{
  std::vector<Diagnostic> diags;
  ScheduleSpec spec = read_spec(doc, "", diags);
  raise_if_any("invalid schedule document", diags);
  spec.validate();
  return spec;
}

json to_json(const ScheduleSpec &spec)
{
  json j;
  j["kind"] = std::string(to_string(spec.kind));
  j["eta_min"] = number(spec.eta_min);
  j["total_steps"] = spec.total_steps;
  j["warmup_fraction"] = number(spec.warmup_fraction);
  if (spec.kind == ScheduleKind::UBA)
  {
    json plan;
    plan["boundaries"] = spec.plan.boundaries;
    plan["phi"] = json::array();
    for (double p : spec.plan.phi)
    {
      plan["phi"].push_back(number(p));
    }
    plan["eta_max"] = json::array();
    for (double e : spec.plan.eta_max)
    {
      plan["eta_max"].push_back(number(e));
    }
    if (spec.plan.phase_shift != 0)
    {
      plan["phase_shift"] = spec.plan.phase_shift;
    }
    j["plan"] = plan;
  }
  j["baseline_params"] = json::object();
  for (const auto &[k, v] : spec.baseline_params)
  {
    j["baseline_params"][k] = number(v);
  }
  return j;
}

std::string trace_csv(const RateTrace &trace)
{
  std::string out = "step,lr\n";
  for (std::size_t i = 0; i < trace.rates.size(); ++i)
  {
    out += std::to_string(i + 1);
    out += ',';
    out += format_number(trace.rates[i]);
    out += '\n';
  }
  return out;
}

namespace
{

ProblemDocument read_problem(const json &doc, const std::string &base,
                             std::vector<Diagnostic> &diags)
{
  ProblemDocument out;
  Fields f(doc, base, diags);
  if (!f.ok())
  {
    return out;
  }
  f.get("n_steps", out.problem.n_steps, true);
  f.get("lambda_lo", out.problem.lambda_lo, true);
  f.get("lambda_hi", out.problem.lambda_hi, true);
  f.get("eta_lo", out.problem.eta_lo, true);
  f.get("eta_hi", out.problem.eta_hi, true);
  if (f.present("solver", false))
  {
    Fields s(*f.find("solver"), f.at("solver"), diags);
    s.get("outer_iterations", out.solver.outer_iterations);
    s.get("cycles", out.solver.cycles);
    s.get("alpha", out.solver.alpha);
    s.get("alpha_decay", out.solver.alpha_decay);
    s.get("lambda_grid", out.solver.lambda_grid);
    s.get("tolerance", out.solver.tolerance);
    s.get("restarts", out.solver.restarts);
    s.finish();
  }
  f.finish();
  return out;
}

}  // namespace

std::vector<Diagnostic> check_problem(const json &doc, const std::string &base)
{
  std::vector<Diagnostic> diags;
  ProblemDocument d = read_problem(doc, base, diags);
  if (diags.empty())
  {
    auto a = d.problem.check();
    auto b = d.solver.check();
    diags.insert(diags.end(), a.begin(), a.end());
    diags.insert(diags.end(), b.begin(), b.end());
    prefix(diags, 0, base);
  }
  return diags;
}

ProblemDocument problem_from_json(const json &doc)
{
  raise_if_any("invalid problem document", check_problem(doc));
  std::vector<Diagnostic> unused;
  return read_problem(doc, "", unused);
}

json to_json(const MinMaxProblem &p)
{
  return {{"n_steps", p.n_steps},
          {"lambda_lo", number(p.lambda_lo)},
          {"lambda_hi", number(p.lambda_hi)},
          {"eta_lo", number(p.eta_lo)},
          {"eta_hi", number(p.eta_hi)}};
}

json to_json(const SolverConfig &c)
{
  return {{"outer_iterations", c.outer_iterations},
          {"cycles", c.cycles},
          {"alpha", number(c.alpha)},
          {"alpha_decay", number(c.alpha_decay)},
          {"lambda_grid", c.lambda_grid},
          {"tolerance", number(c.tolerance)},
          {"restarts", c.restarts}};
}

json to_json(const MinMaxSolution &s)
{
  json etas = json::array();
  for (double e : s.etas)
  {
    etas.push_back(number(e));
  }
  json sorted = json::array();
  for (double e : s.etas_sorted_desc)
  {
    sorted.push_back(number(e));
  }
  return {{"etas", etas},
          {"etas_sorted_desc", sorted},
          {"worst_lambda", number(s.worst_lambda)},
          {"log_objective", number(s.log_objective)},
          {"converged", s.converged},
          {"iterations_used", s.iterations_used}};
}

json to_json(const FitResult &fit)
{
  return {{"a", number(fit.a)},
          {"b", number(fit.b)},
          {"c", number(fit.c)},
          {"phi", number(fit.phi)},
          {"rms_residual", number(fit.rms_residual)},
          {"relation_error", number(fit.relation_error)},
          {"reducible", fit.reducible},
          {"exits_box", fit.exits_box}};
}

json to_json(const Reduction &r)
{
  json j{{"accepted", r.accepted}};
  if (r.accepted)
  {
    j["spec"] = to_json(r.spec);
    j["curve_rms"] = number(r.curve_rms);
  }
  else
  {
    j["reason"] = r.reason;
  }
  return j;
}

json to_json(const PipelineResult &r)
{
  return {{"solution", to_json(r.solution)},
          {"fit_eta_lo", number(r.fit_eta_lo)},
          {"fit_eta_hi", number(r.fit_eta_hi)},
          {"fit", to_json(r.fit)},
          {"reduction", to_json(r.reduction)}};
}

namespace
{

struct MimicDocument
{
  MimicTarget target = MimicTarget::Cosine;
  MimicOptions options;
};

MimicDocument read_mimic(const json &doc, std::vector<Diagnostic> &diags)
{
  MimicDocument out;
  Fields f(doc, "", diags);
  if (!f.ok())
  {
    return out;
  }
  std::string target;
  f.get("target", target, true);
  if (f.find("target") && !target.empty())
  {
    if (auto t = parse_mimic_target(target))
    {
      out.target = *t;
    }
    else
    {
      diags.push_back({"/target", "unknown mimic target '" + target + "'"});
    }
  }
  auto &o = out.options;
  f.get("total_steps", o.total_steps);
  f.get("eta_max", o.eta_max);
  f.get("eta_min", o.eta_min);
  f.get("warmup_fraction", o.warmup_fraction);
  f.get("step_segments", o.step_segments);
  f.get("cycles", o.cycles);
  f.get("pct_start", o.pct_start);
  f.finish();
  if (o.total_steps < 1)
  {
    diags.push_back({"/total_steps", "total_steps must be positive"});
  }
  if (!(o.eta_max > o.eta_min) || !(o.eta_min >= 0.0))
  {
    diags.push_back({"/eta_max", "need 0 <= eta_min < eta_max"});
  }
  if (!(o.warmup_fraction >= 0.0 && o.warmup_fraction < 1.0))
  {
    diags.push_back({"/warmup_fraction", "warmup_fraction must lie in [0, 1)"});
  }
  if (o.step_segments < 1 || o.step_segments > o.total_steps)
  {
    diags.push_back({"/step_segments", "step_segments must lie in [1, total_steps]"});
  }
  if (o.cycles < 1 || 2 * static_cast<std::int64_t>(o.cycles) > o.total_steps)
  {
    diags.push_back({"/cycles", "cycles must lie in [1, total_steps / 2]"});
  }
  if (!(o.pct_start > 0.0 && o.pct_start < 1.0))
  {
    diags.push_back({"/pct_start", "pct_start must lie in (0, 1)"});
  }
  return out;
}

}  // namespace

std::vector<Diagnostic> check_mimic(const json &doc)
{
  std::vector<Diagnostic> diags;
  read_mimic(doc, diags);
  return diags;
}

MimicTarget mimic_target_from_json(const json &doc)
{
  std::vector<Diagnostic> diags;
  auto d = read_mimic(doc, diags);
  raise_if_any("invalid mimic document", diags);
  return d.target;
}

MimicOptions mimic_options_from_json(const json &doc)
{
  std::vector<Diagnostic> diags;
  auto d = read_mimic(doc, diags);
  raise_if_any("invalid mimic document", diags);
  return d.options;
}

namespace
{

SweepConfig read_sweep(const json &doc, std::vector<Diagnostic> &diags)
{
  SweepConfig c;
  Fields f(doc, "", diags);
  if (!f.ok())
  {
    return c;
  }
  f.get("phi", c.phis);
  f.get("n", c.lengths);
  f.get("lambda_points", c.lambda_points);
  f.get("eta_lo", c.eta_lo);
  f.get("eta_hi", c.eta_hi);
  f.get("lambda_lo", c.lambda_lo);
  f.get("lambda_hi", c.lambda_hi);
  std::string exponent = "lower";
  f.get("exponent", exponent);
  if (exponent == "lower")
  {
    c.exponent = ExponentLambda::Lower;
  }
  else if (exponent == "printed")
  {
    c.exponent = ExponentLambda::AsPrinted;
  }
  else
  {
    diags.push_back({"/exponent", "expected 'lower' or 'printed'"});
  }
  f.finish();
  return c;
}

}  // namespace

std::vector<Diagnostic> check_sweep(const json &doc)
{
  std::vector<Diagnostic> diags;
  SweepConfig c = read_sweep(doc, diags);
  if (diags.empty())
  {
    diags = c.check();
  }
  return diags;
}

SweepConfig sweep_from_json(const json &doc)
{
  raise_if_any("invalid bound sweep document", check_sweep(doc));
  std::vector<Diagnostic> unused;
  return read_sweep(doc, unused);
}

std::string sweep_csv(const std::vector<SweepRow> &rows)
{
  std::string out = "phi,n,lambda,t_rel,log_exact,log_bound,margin\n";
  for (const auto &r : rows)
  {
    out += format_number(r.phi) + ',' + std::to_string(r.n) + ',' + format_number(r.lambda) +
           ',' + std::to_string(r.t_rel) + ',' + format_number(r.log_exact) + ',' +
           format_number(r.log_bound) + ',' + format_number(r.margin) + '\n';
  }
  return out;
}

namespace
{

QuadModel read_model(const json &doc, const std::string &base, std::vector<Diagnostic> &diags)
{
  QuadModel m;
  Fields f(doc, base, diags);
  if (!f.ok())
  {
    return m;
  }
  f.get("spectrum", m.spectrum, true);
  f.get("init_coeffs", m.init_coeffs, true);
  f.get("sigma", m.sigma);
  f.finish();
  return m;
}

}  // namespace

std::vector<Diagnostic> check_model(const json &doc, const std::string &base)
{
  std::vector<Diagnostic> diags;
  QuadModel m = read_model(doc, base, diags);
  if (diags.empty())
  {
    diags = m.check();
    prefix(diags, 0, base);
  }
  return diags;
}

QuadModel model_from_json(const json &doc)
{
  raise_if_any("invalid model document", check_model(doc));
  std::vector<Diagnostic> unused;
  return read_model(doc, "", unused);
}

std::string trajectory_csv(const TrajectoryStats &stats, const std::vector<GapBound> &bounds)
{
  const bool with_bounds = !bounds.empty() && bounds.size() == stats.steps.size();
  std::vector<std::vector<std::string>> rows;
  if (with_bounds)
  {
    rows.push_back({"step", "mean_gap", "stderr", "bias_bound", "variance_bound"});
  }
  else
  {
    rows.push_back({"step", "mean_gap", "stderr"});
  }
  for (std::size_t k = 0; k < stats.steps.size(); ++k)
  {
    std::vector<std::string> row{std::to_string(stats.steps[k]), format_number(stats.mean_gap[k]),
                                 format_number(stats.stderr_gap[k])};
    if (with_bounds)
    {
      row.push_back(format_number(bounds[k].bias));
      row.push_back(format_number(bounds[k].variance));
    }
    rows.push_back(std::move(row));
  }
  return csv_text(rows);
}

std::string comparison_csv(const std::vector<ComparisonRow> &rows)
{
  std::vector<std::vector<std::string>> out{
      {"schedule", "final_gap", "final_stderr", "worst_contraction_log"}};
  for (const auto &r : rows)
  {
    out.push_back({r.schedule, format_number(r.final_gap), format_number(r.final_stderr),
                   format_number(r.worst_contraction_log)});
  }
  return csv_text(out);
}

std::string diagnostics_text(const std::vector<Diagnostic> &diags)
{
  std::string out;
  for (const auto &d : diags)
  {
    out += (d.path.empty() ? std::string("/") : d.path) + ": " + d.message + '\n';
  }
  return out;
}

}  // namespace uba::io
