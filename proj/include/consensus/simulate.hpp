#pragma once

#include <functional>
#include <optional>

#include "consensus/reduction.hpp"
#include "consensus/types.hpp"

namespace consensus {

struct LeaderInput {
  enum class Kind { kZero, kConstant };
  Kind kind = Kind::kZero;
  Vector value;  // length m, used when kind == kConstant
};

struct SimulationConfig {
  double t_end = 10.0;
  double dt = 1e-3;
  std::vector<Vector> initial_states;  // N+1 vectors of length n
  LeaderInput leader_input;
  double divergence_guard = 1e12;  // max-abs state bound
};

/// Sampled trace in original agent order. errors[k](i-1) = |x_i - x_0|_2
/// at times[k]; rel_errors divide by 1 + |x_0|_2. diverged means the trace
/// was truncated at the guard crossing.
struct SimulationTrace {
  std::vector<double> times;
  std::vector<Vector> states;  // stacked (N+1)*n, [x_0; x_1; ...; x_N]
  std::vector<Vector> errors;
  std::vector<Vector> rel_errors;
  bool diverged = false;
};

struct ConsensusVerdict {
  bool achieved = false;
  std::optional<double> t_settle;
};

using VectorField = std::function<Vector(const Vector&, double)>;

/// One classical 4th-order Runge-Kutta update. Throws NumericError on a
/// non-finite intermediate value.
Vector rk4_step(const VectorField& field, const Vector& x, double t,
                double dt);

/// Integrates the per-agent closed loop (leader with the configured u_0,
/// followers under the chosen protocol) with fixed-step RK4, recording
/// every step.
SimulationTrace simulate(const ValidatedSystem& system,
                         const SpanningTree& tree, const GainSet& gains,
                         Protocol protocol, const SimulationConfig& config);

/// Integrates the stacked form with identical steps and returns the
/// maximum pointwise deviation from the per-agent trace over the
/// non-diverged horizon. Contract: <= 1e-8.
double stacked_equivalence(const ValidatedSystem& system,
                           const SpanningTree& tree, const GainSet& gains,
                           Protocol protocol, const SimulationConfig& config);

/// y_i(t) = x_{k_i}(t) - x_i(t) along the tree edges (internal labels).
std::vector<Vector> y_trajectory(const SimulationTrace& trace,
                                 const SpanningTree& tree);

/// Consensus is achieved when every follower's relative error stays below
/// epsilon through the final `window` time units. t_settle is the first
/// instant after which the bound holds to the end of the horizon.
ConsensusVerdict consensus_verdict(const SimulationTrace& trace,
                                   double epsilon = 1e-3,
                                   double window = 2.0);

}  // namespace consensus
