#include "consensus/model.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <set>
#include <sstream>

namespace consensus {

const Matrix* MatrixWeightedDigraph::find_weight(int to, int from) const {
  for (const auto& e : edges) {
    if (e.to == to && e.from == from) return &e.weight;
  }
  return nullptr;
}

std::vector<int> MatrixWeightedDigraph::in_neighbors(int node) const {
  std::vector<int> result;
  for (const auto& e : edges) {
    if (e.to == node) result.push_back(e.from);
  }
  std::sort(result.begin(), result.end());
  return result;
}

namespace {

bool all_finite(const Matrix& M) { return M.allFinite(); }

std::string dim_str(const Matrix& M) {
  std::ostringstream os;
  os << M.rows() << "x" << M.cols();
  return os.str();
}

}  // namespace

ValidatedSystem validate_system(std::vector<AgentDynamics> agents,
                                MatrixWeightedDigraph graph) {
  if (agents.size() < 2) {
    throw ValidationError("need a leader and at least one follower");
  }
  if (static_cast<int>(agents.size()) != graph.node_count) {
    std::ostringstream os;
    os << "agent count " << agents.size() << " does not match graph node count "
       << graph.node_count;
    throw ValidationError(os.str());
  }

  const int n = static_cast<int>(agents[0].A.rows());
  const int m = static_cast<int>(agents[0].B.cols());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& ag = agents[i];
    if (ag.A.rows() != n || ag.A.cols() != n) {
      throw ValidationError("agent " + std::to_string(i) + ": A must be " +
                            std::to_string(n) + "x" + std::to_string(n) +
                            ", got " + dim_str(ag.A));
    }
    if (ag.B.rows() != n || ag.B.cols() != m) {
      throw ValidationError("agent " + std::to_string(i) + ": B must be " +
                            std::to_string(n) + "x" + std::to_string(m) +
                            ", got " + dim_str(ag.B));
    }
    if (!all_finite(ag.A) || !all_finite(ag.B)) {
      throw ValidationError("agent " + std::to_string(i) +
                            ": non-finite entry");
    }
  }

  std::set<std::pair<int, int>> seen;
  for (const auto& e : graph.edges) {
    if (e.from < 0 || e.from >= graph.node_count || e.to < 0 ||
        e.to >= graph.node_count) {
      throw ValidationError("edge (" + std::to_string(e.from) + "," +
                            std::to_string(e.to) + ") out of range");
    }
    if (e.to == 0) {
      throw ValidationError("follower-to-leader edge (" +
                            std::to_string(e.from) + ",0) is not allowed");
    }
    if (e.from == e.to) {
      throw ValidationError("self-loop on node " + std::to_string(e.to));
    }
    if (!seen.insert({e.from, e.to}).second) {
      throw ValidationError("duplicate edge (" + std::to_string(e.from) + "," +
                            std::to_string(e.to) + ")");
    }
    if (e.weight.rows() != n || e.weight.cols() != n) {
      throw ValidationError("edge (" + std::to_string(e.from) + "," +
                            std::to_string(e.to) + "): weight must be " +
                            std::to_string(n) + "x" + std::to_string(n));
    }
    if (!all_finite(e.weight)) {
      throw ValidationError("edge (" + std::to_string(e.from) + "," +
                            std::to_string(e.to) + "): non-finite weight");
    }
    if (e.weight.cwiseAbs().maxCoeff() <= kZeroWeightTol) {
      throw ValidationError("zero weight on declared edge (" +
                            std::to_string(e.from) + "," +
                            std::to_string(e.to) + ")");
    }
  }

  ValidatedSystem sys;
  sys.agents = std::move(agents);
  sys.graph = std::move(graph);
  sys.n = n;
  sys.m = m;
  sys.N = sys.graph.node_count - 1;
  return sys;
}

SpanningTree find_spanning_tree(const MatrixWeightedDigraph& graph) {
  const int total = graph.node_count;
  std::vector<std::vector<int>> out(total);
  for (const auto& e : graph.edges) out[e.from].push_back(e.to);

  constexpr int kUnreached = -1;
  std::vector<int> dist(total, kUnreached);
  dist[0] = 0;
  std::deque<int> queue{0};
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v : out[u]) {
      if (dist[v] == kUnreached) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }

  std::vector<int> unreachable;
  for (int v = 1; v < total; ++v) {
    if (dist[v] == kUnreached) unreachable.push_back(v);
  }
  if (!unreachable.empty()) {
    std::ostringstream os;
    os << "unreachable follower {";
    for (std::size_t i = 0; i < unreachable.size(); ++i) {
      os << (i ? "," : "") << unreachable[i];
    }
    os << "}: consensus is impossible under this fixed topology";
    throw ValidationError(os.str());
  }

  // Visitation order: ascending (distance, original id).
  std::vector<int> order(total - 1);
  std::iota(order.begin(), order.end(), 1);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dist[a] < dist[b]; });

  SpanningTree tree;
  tree.to_original.assign(total, 0);
  tree.to_internal.assign(total, 0);
  tree.parent.assign(total, -1);
  for (int i = 1; i < total; ++i) {
    tree.to_original[i] = order[i - 1];
    tree.to_internal[order[i - 1]] = i;
  }

  // Parent: in-neighbor one BFS layer up; ties broken toward the highest
  // original id.
  std::vector<int> parent_orig(total, -1);
  for (const auto& e : graph.edges) {
    if (dist[e.from] == dist[e.to] - 1 && e.from > parent_orig[e.to]) {
      parent_orig[e.to] = e.from;
    }
  }
  for (int i = 1; i < total; ++i) {
    const int orig = tree.to_original[i];
    tree.parent[i] = tree.to_internal[parent_orig[orig]];
    tree.tree_edges.emplace_back(parent_orig[orig], orig);
  }
  return tree;
}

Matrix incidence_matrix(const SpanningTree& tree) {
  const int N = tree.follower_count();
  Matrix P0 = Matrix::Zero(N + 1, N);
  for (int i = 1; i <= N; ++i) {
    P0(tree.parent[i], i - 1) = 1.0;
    P0(i, i - 1) = -1.0;
  }
  return P0;
}

Matrix effective_weight(const SpanningTree& tree, const ValidatedSystem& system,
                        int follower_internal) {
  const int orig = tree.to_original[follower_internal];
  const int parent_orig = tree.to_original[tree.parent[follower_internal]];
  const Matrix* w = system.graph.find_weight(orig, parent_orig);
  if (w == nullptr) {
    throw NumericError("tree edge (" + std::to_string(parent_orig) + "," +
                       std::to_string(orig) + ") missing from graph");
  }
  return *w;
}

BlockLaplacian dst_laplacian(const SpanningTree& tree,
                             const ValidatedSystem& system) {
  const int N = system.N;
  const int n = system.n;
  BlockLaplacian lap;
  lap.L = Matrix::Zero(N * n, N * n);
  lap.Delta = Matrix::Zero(N * n, N * n);
  lap.delta = Matrix::Zero(N * n, n);
  for (int i = 1; i <= N; ++i) {
    const Matrix w = effective_weight(tree, system, i);
    const int r = (i - 1) * n;
    if (tree.parent[i] == 0) {
      lap.Delta.block(r, r, n, n) = w;
      lap.delta.block(r, 0, n, n) = w;
    } else {
      lap.L.block(r, r, n, n) = w;
      lap.L.block(r, (tree.parent[i] - 1) * n, n, n) = -w;
    }
  }
  return lap;
}

BlockLaplacian full_laplacian(const SpanningTree& tree,
                              const ValidatedSystem& system) {
  const int N = system.N;
  const int n = system.n;
  BlockLaplacian lap;
  lap.L = Matrix::Zero(N * n, N * n);
  lap.Delta = Matrix::Zero(N * n, N * n);
  lap.delta = Matrix::Zero(N * n, n);
  for (int i = 1; i <= N; ++i) {
    const int orig = tree.to_original[i];
    const int r = (i - 1) * n;
    for (int j : system.graph.in_neighbors(orig)) {
      const Matrix& w = *system.graph.find_weight(orig, j);
      if (j == 0) {
        lap.Delta.block(r, r, n, n) = w;
        lap.delta.block(r, 0, n, n) = w;
      } else {
        const int jc = (tree.to_internal[j] - 1) * n;
        lap.L.block(r, jc, n, n) = -w;
        lap.L.block(r, r, n, n) += w;
      }
    }
  }
  return lap;
}

}  // namespace consensus
