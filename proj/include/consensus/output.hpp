#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "consensus/simulate.hpp"
#include "consensus/types.hpp"

namespace consensus {

/// CSV with header t,err_1,...,err_N,relerr_1,...,relerr_N (original
/// follower ids), one row per sample, round-trip precision.
void write_csv(const SimulationTrace& trace,
               const std::vector<int>& follower_ids, const std::string& path);

/// Self-contained SVG line chart: one polyline per follower error on a
/// log-scale vertical axis, legend by follower id, no external assets.
void write_svg(const SimulationTrace& trace,
               const std::vector<int>& follower_ids, const std::string& path);

/// Gains as a config fragment ({"gains": {"G": [...], "K": [...]}}),
/// matrices row-major with round-trip-exact doubles.
nlohmann::json gains_to_json(const GainSet& gains);
GainSet gains_from_json(const nlohmann::json& fragment, int N, int m, int n);

}  // namespace consensus
