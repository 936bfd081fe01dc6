// SPDX-License-Identifier: Apache-2.0

#include "uba/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "uba/error.hpp"
#include "uba/io.hpp"
#include "uba/parallel.hpp"

namespace uba::cli
{

namespace
{

using nlohmann::json;

class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Validation failure carrying its diagnostics.
class Rejected : public std::runtime_error
{
public:
  explicit Rejected(std::vector<Diagnostic> d)
      : std::runtime_error("validation failed"), diags(std::move(d))
  {
  }
  Rejected(std::string path, std::string message)
      : Rejected(std::vector<Diagnostic>{{std::move(path), std::move(message)}})
  {
  }
  std::vector<Diagnostic> diags;
};

void reject_if_any(std::vector<Diagnostic> diags)
{
  if (!diags.empty())
  {
    throw Rejected(std::move(diags));
  }
}

void only_keys(const json &doc, std::initializer_list<const char *> allowed,
               std::vector<Diagnostic> &diags)
{
  if (!doc.is_object())
  {
    diags.push_back({"", "expected an object"});
    return;
  }
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = doc.begin(); it != doc.end(); ++it)
  {
    if (!ok.count(it.key()))
    {
      diags.push_back({"/" + it.key(), "unknown field"});
    }
  }
}

std::int64_t int_field(const json &doc, const char *key, std::int64_t fallback,
                       std::vector<Diagnostic> &diags)
{
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null())
  {
    return fallback;
  }
  if (!it->is_number_integer())
  {
    diags.push_back({std::string("/") + key, "expected an integer"});
    return fallback;
  }
  return it->get<std::int64_t>();
}

std::string read_file(const std::string &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw IoError("cannot open input file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad())
  {
    throw IoError("cannot read input file '" + path + "'");
  }
  return buf.str();
}

void write_output(const RunConfig &config, const std::string &text, std::ostream &out)
{
  if (!config.output_path || config.output_path->empty())
  {
    out << text;
    out.flush();
    if (!out)
    {
      throw IoError("cannot write to standard output");
    }
    return;
  }
  std::ofstream file(*config.output_path, std::ios::binary | std::ios::trunc);
  if (!file)
  {
    throw IoError("cannot open output file '" + *config.output_path + "'");
  }
  file << text;
  file.close();
  if (!file)
  {
    throw IoError("cannot write output file '" + *config.output_path + "'");
  }
}

std::string json_text(const json &j) { return j.dump(2) + "\n"; }

json default_model(double sigma)
{
  const double s = 1.0 / std::sqrt(3.0);
  return {{"spectrum", {1.0, 2.0, 4.0}}, {"init_coeffs", {s, s, s}}, {"sigma", sigma}};
}

// File content layered over the defaults. Nested documents that describe one object
// as a whole replace the default instead of merging into it.
json layered(json base, const json &file)
{
  static const std::set<std::string> whole{"schedule", "schedules", "problem", "etas", "plan"};
  if (!file.is_object() || !base.is_object())
  {
    return file;
  }
  for (auto it = file.begin(); it != file.end(); ++it)
  {
    if (whole.count(it.key()) || !it->is_object() || !base.contains(it.key()) ||
        !base[it.key()].is_object())
    {
      base[it.key()] = *it;
    }
    else
    {
      base[it.key()] = layered(base[it.key()], *it);
    }
  }
  return base;
}

unsigned resolve_threads(const RunConfig &config)
{
  if (config.threads)
  {
    return *config.threads;
  }
  if (const char *env = std::getenv("UBA_SCHED_THREADS"); env && *env)
  {
    char *end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (*end != '\0' || v > 4096)
    {
      throw Rejected("", "UBA_SCHED_THREADS must be a non-negative integer");
    }
    return static_cast<unsigned>(v);
  }
  return 0;
}

std::string cmd_trace(const json &doc)
{
  reject_if_any(io::check_spec(doc));
  return io::trace_csv(trace(io::spec_from_json(doc)));
}

std::string cmd_mimic(const json &doc)
{
  reject_if_any(io::check_mimic(doc));
  const ScheduleSpec spec = mimic(io::mimic_target_from_json(doc), io::mimic_options_from_json(doc));
  return json_text(io::to_json(spec));
}

std::string cmd_solve(const json &doc, std::uint64_t seed)
{
  reject_if_any(io::check_problem(doc));
  auto d = io::problem_from_json(doc);
  d.solver.seed = seed;
  return json_text(io::to_json(solve_minmax(d.problem, d.solver)));
}

std::string cmd_fit(const json &doc, std::uint64_t seed)
{
  std::vector<Diagnostic> diags;
  only_keys(doc, {"etas", "eta_lo", "eta_hi", "order", "problem"}, diags);
  reject_if_any(diags);

  if (doc.contains("problem") && !doc["problem"].is_null())
  {
    if (doc.contains("etas") && !doc["etas"].is_null())
    {
      throw Rejected("/etas", "give either etas or problem, not both");
    }
    reject_if_any(io::check_problem(doc["problem"], "/problem"));
    auto d = io::problem_from_json(doc["problem"]);
    d.solver.seed = seed;
    return json_text(io::to_json(pipeline(d.problem, d.solver)));
  }

  const json etas_doc = doc.value("etas", json());
  if (!etas_doc.is_array() || etas_doc.empty())
  {
    throw Rejected("/etas", "expected a non-empty array of rates (or a problem object)");
  }
  std::vector<double> etas;
  for (std::size_t i = 0; i < etas_doc.size(); ++i)
  {
    if (!etas_doc[i].is_number())
    {
      diags.push_back({"/etas/" + std::to_string(i), "expected a number"});
      continue;
    }
    etas.push_back(etas_doc[i].get<double>());
  }
  const std::string order = doc.value("order", std::string("descending"));
  if (order != "descending" && order != "ascending")
  {
    diags.push_back({"/order", "expected 'descending' or 'ascending'"});
  }
  reject_if_any(diags);

  const auto [mn, mx] = std::minmax_element(etas.begin(), etas.end());
  auto bound = [&](const char *key, double fallback) {
    auto it = doc.find(key);
    if (it == doc.end() || it->is_null())
    {
      return fallback;
    }
    if (!it->is_number())
    {
      diags.push_back({std::string("/") + key, "expected a number"});
      return fallback;
    }
    return it->get<double>();
  };
  double lo = bound("eta_lo", *mn);
  double hi = bound("eta_hi", *mx);
  reject_if_any(diags);
  if (hi == lo)
  {
    // Constant data: widen the box so the constant sits at its top.
    if (hi > 0.0)
    {
      lo = 0.0;
    }
    else
    {
      hi = 1.0;
    }
  }
  const auto n = static_cast<std::int64_t>(etas.size());
  const FitResult fit = order == "ascending" ? fit_parametric_ascending(etas, lo, hi, n, seed)
                                             : fit_parametric(etas, lo, hi, n, seed);
  Reduction red = reduce_to_uba(fit, lo, hi, n);
  if (red.accepted && order == "ascending")
  {
    red.spec = ascending_variant(red.spec);
  }
  json out{{"fit", io::to_json(fit)}, {"reduction", io::to_json(red)}};
  return json_text(out);
}

std::string cmd_bound(const json &doc)
{
  reject_if_any(io::check_sweep(doc));
  return io::sweep_csv(bound_sweep(io::sweep_from_json(doc)));
}

struct SimulationDocument
{
  QuadModel model;
  std::int64_t steps = -1;
  std::int64_t replicas = default_replicas;
};

SimulationDocument read_simulation(const json &doc, std::uint64_t seed,
                                   std::vector<Diagnostic> &diags)
{
  SimulationDocument d;
  auto m = io::check_model(doc.value("model", json()), "/model");
  diags.insert(diags.end(), m.begin(), m.end());
  if (m.empty())
  {
    d.model = io::model_from_json(doc["model"]);
  }
  d.model.seed = seed;
  d.steps = int_field(doc, "steps", -1, diags);
  d.replicas = int_field(doc, "replicas", default_replicas, diags);
  if (d.replicas < 1)
  {
    diags.push_back({"/replicas", "replicas must be at least 1"});
  }
  return d;
}

std::vector<GapBound> trajectory_bounds(const QuadModel &model, const ScheduleSpec &spec,
                                        const TrajectoryStats &stats)
{
  BoundInputs in;
  in.n = spec.total_steps;
  in.phi = spec.plan.phi.front();
  in.eta_lo = spec.eta_min;
  in.eta_hi = spec.plan.eta_max.front();
  in.lambda_lo = model.lambda_lo();
  in.lambda_hi = model.lambda_hi();
  in.sigma = model.sigma;
  in.spectrum = model.spectrum;
  in.init_dist_sq = model.init_dist_sq();
  std::vector<GapBound> out;
  for (std::int64_t t : stats.steps)
  {
    if (t == 0)
    {
      out.push_back({in.lambda_hi * in.init_dist_sq, 0.0});
      continue;
    }
    in.t_rel = t;
    out.push_back(theorem1_bound(in));
  }
  return out;
}

std::string cmd_simulate(const json &doc, std::uint64_t seed)
{
  std::vector<Diagnostic> diags;
  only_keys(doc, {"model", "schedule", "steps", "replicas", "bounds"}, diags);
  auto sched = io::check_spec(doc.value("schedule", json()), "/schedule");
  diags.insert(diags.end(), sched.begin(), sched.end());
  SimulationDocument d = read_simulation(doc, seed, diags);
  const json bounds_doc = doc.value("bounds", json(false));
  if (!bounds_doc.is_boolean())
  {
    diags.push_back({"/bounds", "expected a boolean"});
  }
  reject_if_any(diags);

  const ScheduleSpec spec = io::spec_from_json(doc["schedule"]);
  const std::int64_t steps = d.steps < 0 ? spec.total_steps : d.steps;
  if (steps > spec.total_steps)
  {
    throw Rejected("/steps", "steps must not exceed the schedule's total_steps");
  }
  const bool with_bounds = bounds_doc.get<bool>();
  if (with_bounds)
  {
    const bool single_uba = spec.kind == ScheduleKind::UBA && spec.plan.num_phases() == 1 &&
                            spec.plan.phase_shift % 2 == 0 && spec.warmup_steps() == 0;
    if (!single_uba)
    {
      throw Rejected("/bounds", "bounds need a single descending UBA phase without warmup");
    }
    if (std::abs(spec.plan.phi.front() - 2.0) < phi_exclusion)
    {
      throw Rejected("/schedule/plan/phi/0", "bounds are undefined at phi = 2");
    }
  }
  const TrajectoryStats stats = simulate(d.model, spec, steps, d.replicas);
  if (!with_bounds)
  {
    return io::trajectory_csv(stats);
  }
  return io::trajectory_csv(stats, trajectory_bounds(d.model, spec, stats));
}

std::string cmd_compare(const json &doc, std::uint64_t seed)
{
  std::vector<Diagnostic> diags;
  only_keys(doc, {"model", "schedules", "steps", "replicas"}, diags);
  SimulationDocument d = read_simulation(doc, seed, diags);
  std::vector<NamedSchedule> specs;
  const json list = doc.value("schedules", json());
  if (!list.is_array() || list.empty())
  {
    diags.push_back({"/schedules", "expected a non-empty array of schedules"});
  }
  else
  {
    for (std::size_t i = 0; i < list.size(); ++i)
    {
      const std::string base = "/schedules/" + std::to_string(i);
      const json &item = list[i];
      if (!item.is_object())
      {
        diags.push_back({base, "expected an object with name and schedule"});
        continue;
      }
      for (auto it = item.begin(); it != item.end(); ++it)
      {
        if (it.key() != "name" && it.key() != "schedule")
        {
          diags.push_back({base + "/" + it.key(), "unknown field"});
        }
      }
      std::string name = "schedule_" + std::to_string(i + 1);
      if (item.contains("name"))
      {
        if (item["name"].is_string())
        {
          name = item["name"].get<std::string>();
        }
        else
        {
          diags.push_back({base + "/name", "expected a string"});
        }
      }
      auto s = io::check_spec(item.value("schedule", json()), base + "/schedule");
      diags.insert(diags.end(), s.begin(), s.end());
      if (s.empty())
      {
        specs.push_back({name, io::spec_from_json(item["schedule"])});
      }
    }
  }
  reject_if_any(diags);
  for (const auto &s : specs)
  {
    if (s.spec.total_steps != specs.front().spec.total_steps)
    {
      throw Rejected("/schedules", "all schedules must share total_steps");
    }
  }
  const std::int64_t steps = d.steps < 0 ? specs.front().spec.total_steps : d.steps;
  if (steps > specs.front().spec.total_steps)
  {
    throw Rejected("/steps", "steps must not exceed total_steps");
  }
  return io::comparison_csv(compare_schedules(d.model, specs, steps, d.replicas));
}

std::vector<std::string> split_key(const std::string &key)
{
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : key)
  {
    if (ch == '.')
    {
      parts.push_back(cur);
      cur.clear();
    }
    else
    {
      cur += ch;
    }
  }
  parts.push_back(cur);
  return parts;
}

}  // namespace

const std::vector<std::string> &commands()
{
  static const std::vector<std::string> names{"trace", "solve",   "fit",   "bound",
                                              "simulate", "compare", "mimic", "validate"};
  return names;
}

json defaults(const std::string &command)
{
  if (command == "trace" || command == "validate")
  {
    return {{"eta_min", 0.0}, {"warmup_fraction", 0.0}, {"baseline_params", json::object()}};
  }
  if (command == "mimic")
  {
    const MimicOptions o;
    return {{"target", "Cosine"},          {"total_steps", o.total_steps},
            {"eta_max", o.eta_max},        {"eta_min", o.eta_min},
            {"warmup_fraction", o.warmup_fraction}, {"step_segments", o.step_segments},
            {"cycles", o.cycles},          {"pct_start", o.pct_start}};
  }
  if (command == "solve")
  {
    json j = io::to_json(MinMaxProblem{4, 1.0, 10.0, 0.0, 1.0});
    j["solver"] = io::to_json(SolverConfig{});
    return j;
  }
  if (command == "fit")
  {
    return {{"order", "descending"}};
  }
  if (command == "bound")
  {
    const SweepConfig c;
    return {{"phi", c.phis},
            {"n", c.lengths},
            {"lambda_points", c.lambda_points},
            {"eta_lo", c.eta_lo},
            {"eta_hi", c.eta_hi},
            {"lambda_lo", c.lambda_lo},
            {"lambda_hi", c.lambda_hi},
            {"exponent", "lower"}};
  }
  if (command == "simulate")
  {
    return {{"model", default_model(0.1)},
            {"schedule", io::to_json(make_uba(50, 4.0, 0.25))},
            {"steps", nullptr},
            {"replicas", default_replicas},
            {"bounds", false}};
  }
  if (command == "compare")
  {
    return {{"model", default_model(0.0)}, {"steps", nullptr}, {"replicas", default_replicas}};
  }
  throw InvalidSpec("unknown command '" + command + "'");
}

void apply_override(json &doc, const std::string &key, const std::string &value)
{
  if (key.empty())
  {
    throw InvalidSpec("--set needs a non-empty key");
  }
  const auto parts = split_key(key);
  std::string pointer;
  for (const auto &p : parts)
  {
    if (p.empty())
    {
      throw InvalidSpec("--set key '" + key + "' has an empty component");
    }
    pointer += "/" + p;
  }
  const json::json_pointer ptr(pointer);

  json parsed;
  try
  {
    parsed = json::parse(value);
  }
  catch (const json::parse_error &)
  {
    parsed = value;
  }

  if (!doc.contains(ptr))
  {
    const json::json_pointer parent = ptr.parent_pointer();
    const bool map_entry = parts.size() >= 2 && parts[parts.size() - 2] == "baseline_params" &&
                           doc.contains(parent) && doc[parent].is_object();
    if (!map_entry)
    {
      throw InvalidSpec("--set key '" + key + "' does not name an existing field");
    }
  }
  doc[ptr] = parsed;
}

Status run(const RunConfig &config, std::ostream &out, std::ostream &err)
{
  const auto &names = commands();
  if (std::find(names.begin(), names.end(), config.command) == names.end())
  {
    err << "error: unknown command '" << config.command << "'\n";
    return Status::Invalid;
  }
  try
  {
    set_thread_count(resolve_threads(config));

    json doc = defaults(config.command);
    if (config.input_path)
    {
      const std::string text = read_file(*config.input_path);
      try
      {
        doc = layered(doc, io::parse(text));
      }
      catch (const io::ParseError &e)
      {
        err << *config.input_path << ":" << e.line() << ":" << e.column()
            << ": malformed JSON: " << e.what() << "\n";
        return Status::Invalid;
      }
    }
    for (const auto &[key, value] : config.overrides)
    {
      apply_override(doc, key, value);
    }

    std::string text;
    const std::string &c = config.command;
    if (c == "trace")
    {
      text = cmd_trace(doc);
    }
    else if (c == "validate")
    {
      // Diagnostics are the command's output.
      const auto diags = io::check_spec(doc);
      write_output(config, io::diagnostics_text(diags), out);
      return diags.empty() ? Status::Ok : Status::Invalid;
    }
    else if (c == "mimic")
    {
      text = cmd_mimic(doc);
    }
    else if (c == "solve")
    {
      text = cmd_solve(doc, config.seed);
    }
    else if (c == "fit")
    {
      text = cmd_fit(doc, config.seed);
    }
    else if (c == "bound")
    {
      text = cmd_bound(doc);
    }
    else if (c == "simulate")
    {
      text = cmd_simulate(doc, config.seed);
    }
    else
    {
      text = cmd_compare(doc, config.seed);
    }
    write_output(config, text, out);
    return Status::Ok;
  }
  catch (const Rejected &e)
  {
    err << "invalid input:\n" << io::diagnostics_text(e.diags);
    return Status::Invalid;
  }
  catch (const IoError &e)
  {
    err << "error: " << e.what() << "\n";
    return Status::Io;
  }
  catch (const InvalidSpec &e)
  {
    err << "invalid input: " << e.what() << "\n";
    return Status::Invalid;
  }
  catch (const OutOfRange &e)
  {
    err << "invalid input: " << e.what() << "\n";
    return Status::Invalid;
  }
  catch (const json::exception &e)
  {
    err << "invalid input: " << e.what() << "\n";
    return Status::Invalid;
  }
}

}  // namespace uba::cli
