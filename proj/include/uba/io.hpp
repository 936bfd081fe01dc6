// SPDX-License-Identifier: Apache-2.0

#ifndef UBA_IO_HPP
#define UBA_IO_HPP

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "uba/bounds.hpp"
#include "uba/curve_fit.hpp"
#include "uba/minmax.hpp"
#include "uba/quad_sim.hpp"
#include "uba/schedule.hpp"

namespace uba::io
{

using nlohmann::json;

// Malformed JSON text, with the 1-based line and column of the offending character.
class ParseError : public std::runtime_error
{
public:
  ParseError(const std::string &what, std::size_t line, std::size_t column)
      : std::runtime_error(what), line_(line), column_(column)
  {
  }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

private:
  std::size_t line_;
  std::size_t column_;
};

json parse(std::string_view text);

// 12 significant digits, '.' separator; inf / nan spelled out.
std::string format_number(double x);

// Finite values rounded to 12 significant digits; non-finite ones as strings.
json number(double x);

// Every diagnostic of a document: structure, types, unknown keys and invariants.
// Paths are JSON pointers relative to `base`.
std::vector<Diagnostic> check_spec(const json &doc, const std::string &base = "");
ScheduleSpec spec_from_json(const json &doc);
json to_json(const ScheduleSpec &spec);

std::string trace_csv(const RateTrace &trace);

struct ProblemDocument
{
  MinMaxProblem problem;
  SolverConfig solver;
};

std::vector<Diagnostic> check_problem(const json &doc, const std::string &base = "");
ProblemDocument problem_from_json(const json &doc);
json to_json(const MinMaxProblem &problem);
json to_json(const SolverConfig &config);
json to_json(const MinMaxSolution &solution);

json to_json(const FitResult &fit);
json to_json(const Reduction &reduction);
json to_json(const PipelineResult &result);

std::vector<Diagnostic> check_mimic(const json &doc);
MimicTarget mimic_target_from_json(const json &doc);
MimicOptions mimic_options_from_json(const json &doc);

std::vector<Diagnostic> check_sweep(const json &doc);
SweepConfig sweep_from_json(const json &doc);
std::string sweep_csv(const std::vector<SweepRow> &rows);

std::vector<Diagnostic> check_model(const json &doc, const std::string &base = "");
QuadModel model_from_json(const json &doc);

// Bound columns are written only when `bounds` has one entry per recorded step.
std::string trajectory_csv(const TrajectoryStats &stats, const std::vector<GapBound> &bounds = {});
std::string comparison_csv(const std::vector<ComparisonRow> &rows);

std::string diagnostics_text(const std::vector<Diagnostic> &diags);

}  // namespace uba::io

#endif  // UBA_IO_HPP
