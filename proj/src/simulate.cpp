#include "consensus/simulate.hpp"

#include <cmath>
#include <string>

#include "consensus/model.hpp"

namespace consensus {

namespace {

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) {
    throw NumericError(std::string("non-finite value in ") + what);
  }
}

void validate_config(const ValidatedSystem& system,
                     const SimulationConfig& config) {
  if (!(config.dt > 0)) throw ValidationError("sim: dt must be positive");
  if (!(config.t_end >= config.dt)) {
    throw ValidationError("sim: t_end must be at least dt");
  }
  if (static_cast<int>(config.initial_states.size()) != system.N + 1) {
    throw ValidationError("sim: need " + std::to_string(system.N + 1) +
                          " initial states");
  }
  for (const auto& x : config.initial_states) {
    if (static_cast<int>(x.size()) != system.n) {
      throw ValidationError("sim: initial state dimension must be " +
                            std::to_string(system.n));
    }
  }
  if (config.leader_input.kind == LeaderInput::Kind::kConstant &&
      static_cast<int>(config.leader_input.value.size()) != system.m) {
    throw ValidationError("sim: leader input must have length " +
                          std::to_string(system.m));
  }
  if (!(config.divergence_guard > 0)) {
    throw ValidationError("sim: divergence guard must be positive");
  }
}

Vector leader_u0(const ValidatedSystem& system, const SimulationConfig& cfg) {
  if (cfg.leader_input.kind == LeaderInput::Kind::kConstant) {
    return cfg.leader_input.value;
  }
  return Vector::Zero(system.m);
}

/// Per-agent right-hand side over the stacked state in original order.
class AgentField {
 public:
  AgentField(const ValidatedSystem& system, const SpanningTree& tree,
             const GainSet& gains, Protocol protocol, Vector u0)
      : system_(system), u0_(std::move(u0)), n_(system.n) {
    const int N = system.N;
    parent_of_.assign(N + 1, 0);
    weight_of_.resize(N + 1);
    neighbors_.resize(N + 1);
    for (int i = 1; i <= N; ++i) {
      const int orig = tree.to_original[i];
      if (protocol == Protocol::kDst) {
        parent_of_[orig] = tree.to_original[tree.parent[i]];
        weight_of_[orig] = effective_weight(tree, system, i);
      } else {
        for (int j : system.graph.in_neighbors(orig)) {
          neighbors_[orig].emplace_back(j,
                                        *system.graph.find_weight(orig, j));
        }
      }
    }
    BK_.resize(N + 1);
    AG_.resize(N + 1);
    for (int orig = 1; orig <= N; ++orig) {
      const AgentDynamics& ag = system.agents[orig];
      BK_[orig] = ag.B * gains.K[orig - 1];
      AG_[orig] = ag.A - ag.B * gains.G[orig - 1];
    }
    dst_ = protocol == Protocol::kDst;
  }

  Vector operator()(const Vector& x, double /*t*/) const {
    const int N = system_.N;
    Vector dx((N + 1) * n_);
    const auto seg = [&](int agent) { return x.segment(agent * n_, n_); };
    dx.head(n_) = system_.agents[0].A * seg(0) + system_.agents[0].B * u0_;
    for (int i = 1; i <= N; ++i) {
      Vector d = AG_[i] * seg(i);
      if (dst_) {
        d += BK_[i] * (weight_of_[i] * (seg(parent_of_[i]) - seg(i)));
      } else {
        for (const auto& [j, w] : neighbors_[i]) {
          d += BK_[i] * (w * (seg(j) - seg(i)));
        }
      }
      dx.segment(i * n_, n_) = d;
    }
    return dx;
  }

 private:
  const ValidatedSystem& system_;
  Vector u0_;
  int n_;
  bool dst_ = true;
  std::vector<int> parent_of_;
  std::vector<Matrix> weight_of_;
  std::vector<std::vector<std::pair<int, Matrix>>> neighbors_;
  std::vector<Matrix> BK_;
  std::vector<Matrix> AG_;
};

}  // namespace

Vector rk4_step(const VectorField& field, const Vector& x, double t,
                double dt) {
  const Vector k1 = field(x, t);
  require_finite(k1, "rk4 stage 1");
  const Vector k2 = field(x + 0.5 * dt * k1, t + 0.5 * dt);
  require_finite(k2, "rk4 stage 2");
  const Vector k3 = field(x + 0.5 * dt * k2, t + 0.5 * dt);
  require_finite(k3, "rk4 stage 3");
  const Vector k4 = field(x + dt * k3, t + dt);
  require_finite(k4, "rk4 stage 4");
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

SimulationTrace simulate(const ValidatedSystem& system,
                         const SpanningTree& tree, const GainSet& gains,
                         Protocol protocol, const SimulationConfig& config) {
  validate_config(system, config);
  const int N = system.N;
  const int n = system.n;
  const AgentField field(system, tree, gains, protocol,
                         leader_u0(system, config));

  Vector x((N + 1) * n);
  for (int i = 0; i <= N; ++i) {
    x.segment(i * n, n) = config.initial_states[i];
  }

  const long steps = std::lround(config.t_end / config.dt);
  SimulationTrace trace;
  trace.times.reserve(steps + 1);
  trace.states.reserve(steps + 1);
  trace.errors.reserve(steps + 1);
  trace.rel_errors.reserve(steps + 1);

  for (long k = 0;; ++k) {
    const double t = k * config.dt;
    trace.times.push_back(t);
    trace.states.push_back(x);
    Vector err(N), rel(N);
    const double leader_norm = x.head(n).norm();
    for (int i = 1; i <= N; ++i) {
      err(i - 1) = (x.segment(i * n, n) - x.head(n)).norm();
      rel(i - 1) = err(i - 1) / (1.0 + leader_norm);
    }
    trace.errors.push_back(err);
    trace.rel_errors.push_back(rel);

    if (x.cwiseAbs().maxCoeff() > config.divergence_guard) {
      trace.diverged = true;
      break;
    }
    if (k == steps) break;
    x = rk4_step([&field](const Vector& y, double s) { return field(y, s); },
                 x, t, config.dt);
  }
  return trace;
}

double stacked_equivalence(const ValidatedSystem& system,
                           const SpanningTree& tree, const GainSet& gains,
                           Protocol protocol, const SimulationConfig& config) {
  const SimulationTrace per_agent =
      simulate(system, tree, gains, protocol, config);
  const ClosedLoopMatrix loop =
      closed_loop_matrix(system, tree, gains, protocol);
  const Vector u0 = leader_u0(system, config);
  const int N = system.N;
  const int n = system.n;

  // Stacked state is in internal label order; integrate and compare after
  // mapping back to original order.
  Vector z((N + 1) * n);
  z.head(n) = config.initial_states[0];
  for (int i = 1; i <= N; ++i) {
    z.segment(i * n, n) = config.initial_states[tree.to_original[i]];
  }
  const VectorField field = [&](const Vector& y, double) -> Vector {
    return loop.F * y + loop.B_stack * u0;
  };

  double max_dev = 0.0;
  for (std::size_t k = 0; k < per_agent.times.size(); ++k) {
    const Vector& ref = per_agent.states[k];
    double dev = (z.head(n) - ref.head(n)).cwiseAbs().maxCoeff();
    for (int i = 1; i <= N; ++i) {
      const int orig = tree.to_original[i];
      dev = std::max(dev, (z.segment(i * n, n) - ref.segment(orig * n, n))
                              .cwiseAbs()
                              .maxCoeff());
    }
    max_dev = std::max(max_dev, dev);
    if (k + 1 < per_agent.times.size()) {
      z = rk4_step(field, z, per_agent.times[k], config.dt);
    }
  }
  return max_dev;
}

std::vector<Vector> y_trajectory(const SimulationTrace& trace,
                                 const SpanningTree& tree) {
  const int N = tree.follower_count();
  if (trace.states.empty()) return {};
  const int n = static_cast<int>(trace.states[0].size()) / (N + 1);
  std::vector<Vector> ys;
  ys.reserve(trace.states.size());
  for (const Vector& x : trace.states) {
    Vector y(N * n);
    for (int i = 1; i <= N; ++i) {
      const int orig = tree.to_original[i];
      const int parent_orig = tree.to_original[tree.parent[i]];
      y.segment((i - 1) * n, n) =
          x.segment(parent_orig * n, n) - x.segment(orig * n, n);
    }
    ys.push_back(std::move(y));
  }
  return ys;
}

ConsensusVerdict consensus_verdict(const SimulationTrace& trace,
                                   double epsilon, double window) {
  ConsensusVerdict verdict;
  if (trace.diverged || trace.times.empty()) return verdict;

  // Scan backwards for the first time after which the bound always holds.
  std::optional<double> settle;
  for (std::size_t k = trace.times.size(); k-- > 0;) {
    if (trace.rel_errors[k].size() &&
        trace.rel_errors[k].maxCoeff() >= epsilon) {
      break;
    }
    settle = trace.times[k];
  }
  verdict.t_settle = settle;
  verdict.achieved =
      settle.has_value() && *settle <= trace.times.back() - window;
  return verdict;
}

}  // namespace consensus
