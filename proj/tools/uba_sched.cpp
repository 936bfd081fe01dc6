// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uba/cli.hpp"

namespace
{

struct Flags
{
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int threads = -1;
  std::vector<std::string> sets;
};

void add_flags(CLI::App &cmd, Flags &f)
{
  cmd.add_option("--config", f.config, "JSON input document");
  cmd.add_option("--out", f.out, "output file (default: standard output)");
  cmd.add_option("--seed", f.seed, "seed for all stochastic steps");
  cmd.add_option("--threads", f.threads, "worker threads; 0 = all cores")->check(CLI::NonNegativeNumber);
  cmd.add_option("--set", f.sets, "override a field, key=value with dotted keys")
      ->allow_extra_args(false);
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Budget-aware learning-rate schedule toolkit"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> help{
      {"trace", "rate trace of a schedule as CSV"},
      {"solve", "numerical min-max schedule design"},
      {"fit", "rational-cosine fit and reduction to one parameter"},
      {"bound", "product bound sweep as CSV"},
      {"simulate", "SGD on a quadratic landscape"},
      {"compare", "compare schedules under one budget"},
      {"mimic", "UBA parameters reproducing a known schedule"},
      {"validate", "list every problem in a schedule document"}};

  Flags flags;
  for (const auto &[name, text] : help)
  {
    add_flags(*app.add_subcommand(name, text), flags);
  }

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(uba::cli::Status::Invalid);
  }

  uba::cli::RunConfig config;
  for (const auto *sub : app.get_subcommands())
  {
    config.command = sub->get_name();
  }
  if (!flags.config.empty())
  {
    config.input_path = flags.config;
  }
  if (!flags.out.empty())
  {
    config.output_path = flags.out;
  }
  config.seed = flags.seed;
  if (flags.threads >= 0)
  {
    config.threads = static_cast<unsigned>(flags.threads);
  }
  for (const auto &s : flags.sets)
  {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
    {
      std::cerr << "error: --set expects key=value, got '" << s << "'\n";
      return static_cast<int>(uba::cli::Status::Invalid);
    }
    config.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return static_cast<int>(uba::cli::run(config, std::cout, std::cerr));
}
