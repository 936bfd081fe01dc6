// SPDX-License-Identifier: Apache-2.0

#ifndef UBA_CLI_HPP
#define UBA_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace uba::cli
{

enum class Status : int
{
  Ok = 0,
  Invalid = 1,
  Io = 2
};

struct RunConfig
{
  std::string command;                     // trace solve fit bound simulate compare mimic validate
  std::optional<std::string> input_path;   // JSON document
  std::optional<std::string> output_path;  // standard output when empty
  std::uint64_t seed = 0;
  std::optional<unsigned> threads;  // falls back to UBA_SCHED_THREADS, then all cores
  std::vector<std::pair<std::string, std::string>> overrides;  // dotted key, value
};

const std::vector<std::string> &commands();

// Document each command starts from before the input file and overrides are applied.
nlohmann::json defaults(const std::string &command);

// Applies a dotted-key override ("plan.phi.0=3"). The key must already exist, except for
// new entries under baseline_params. Values parse as JSON, else as a string.
void apply_override(nlohmann::json &doc, const std::string &key, const std::string &value);

Status run(const RunConfig &config, std::ostream &out, std::ostream &err);

}  // namespace uba::cli

#endif  // UBA_CLI_HPP
