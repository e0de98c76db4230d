#pragma once

#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "consensus/simulate.hpp"
#include "consensus/types.hpp"

namespace consensus {

/// Fully validated run description. Everything optional carries its
/// default so reports can echo the effective configuration.
struct RunConfig {
  ValidatedSystem system;
  Protocol protocol = Protocol::kDst;
  std::optional<GainSet> gains;
  double design_rate = 1.0;
  SimulationConfig sim;
  Tolerances tolerances;
};

/// Parses and validates a JSON config. Parse errors carry line/column;
/// semantic errors carry the offending field path. Unknown fields are
/// rejected at every level.
RunConfig parse_config(const std::string& path);

/// Same, from an in-memory document (used by parse_config and tests).
RunConfig parse_config_json(const nlohmann::json& doc);

}  // namespace consensus
