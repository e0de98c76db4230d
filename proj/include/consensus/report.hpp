#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "consensus/config.hpp"
#include "consensus/synthesis.hpp"

namespace consensus {

/// CLI flags that override config values.
struct CliOptions {
  std::string out_dir = ".";
  std::optional<Protocol> protocol;
  std::optional<double> rate;
  std::optional<long> seed;  // echoed into reports for reproducibility
};

nlohmann::json criterion_report_to_json(const CriterionReport& report);

/// Exit codes: 0 pass, 2 criteria failed or consensus not achieved,
/// 1 usage or numeric error (thrown as exceptions by the callees).
inline constexpr int kExitPass = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFail = 2;

/// Dispatches one subcommand (validate | tree | reduce | design | check |
/// simulate | report), writes artifacts under opts.out_dir, prints a
/// human-readable summary to stdout and returns the exit code.
int run_command(const std::string& cmd, RunConfig config,
                const CliOptions& opts);

}  // namespace consensus
