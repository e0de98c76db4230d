#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace consensus {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Input violates a model invariant (dimensions, zero weight on a declared
/// edge, follower-to-leader edge, unreachable follower, malformed config).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric procedure could not complete: uncontrollable pair, singular
/// effective weight, eigensolver failure, inconsistent rank decisions.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Max-abs threshold below which a weight block counts as zero.
inline constexpr double kZeroWeightTol = 1e-12;

/// One agent: state map A (n x n) and input map B (n x m).
struct AgentDynamics {
  Matrix A;
  Matrix B;
};

/// Directed edge from -> to carrying an n x n weight block.
struct WeightedEdge {
  int from = 0;
  int to = 0;
  Matrix weight;
};

/// Digraph on nodes 0..N where node 0 is the leader. An edge (j -> i)
/// means agent i receives agent j's state, weighted by the stored block.
struct MatrixWeightedDigraph {
  int node_count = 0;
  std::vector<WeightedEdge> edges;

  /// Weight of edge from -> to, or nullptr if absent.
  const Matrix* find_weight(int to, int from) const;

  /// Sorted list of nodes j with an edge j -> node.
  std::vector<int> in_neighbors(int node) const;
};

/// Agents plus topology with consistent dimensions recorded.
struct ValidatedSystem {
  std::vector<AgentDynamics> agents;  // index 0 is the leader
  MatrixWeightedDigraph graph;
  int n = 0;  // state dimension
  int m = 0;  // input dimension
  int N = 0;  // follower count
};

/// Leader-rooted directed spanning tree. Followers carry internal labels
/// 1..N assigned in BFS visitation order so that parent[i] < i; the
/// to_original / to_internal permutations map back to user-facing ids.
struct SpanningTree {
  std::vector<int> parent;       // internal labels; parent[0] = -1
  std::vector<int> to_original;  // internal label -> original node id
  std::vector<int> to_internal;  // original node id -> internal label
  std::vector<std::pair<int, int>> tree_edges;  // (from, to), original ids

  int follower_count() const { return static_cast<int>(parent.size()) - 1; }
};

/// Follower-block Laplacian L (Nn x Nn), leader coupling Delta
/// (block diagonal, Nn x Nn) and stacked leader weights delta (Nn x n).
/// Blocks are indexed by internal follower labels.
struct BlockLaplacian {
  Matrix L;
  Matrix Delta;
  Matrix delta;
};

/// Per-follower gain matrices, indexed by original follower id - 1.
/// Each entry is m x n. G may be zero when an agent's own state is
/// unavailable.
struct GainSet {
  std::vector<Matrix> G;
  std::vector<Matrix> K;
};

enum class Protocol { kDst, kAllNeighbors };

inline const char* protocol_name(Protocol p) {
  return p == Protocol::kDst ? "dst" : "all-neighbors";
}

/// Numeric knobs echoed in every report.
struct Tolerances {
  double hurwitz_margin = 1e-9;
  double rank_tol_scale = 1.0;
  int gerschgorin_grid = 400;  // grid steps per half-axis
};

}  // namespace consensus
