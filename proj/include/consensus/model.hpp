#pragma once

#include "consensus/types.hpp"

namespace consensus {

/// Checks every model invariant and records consistent dimensions.
/// Throws ValidationError on dimension mismatch, zero weight on a declared
/// edge, self-loops, duplicate edges, or a follower-to-leader edge.
ValidatedSystem validate_system(std::vector<AgentDynamics> agents,
                                MatrixWeightedDigraph graph);

/// Extracts a leader-rooted DST by breadth-first layering from node 0.
/// Followers are labeled in visitation order (ascending distance, then
/// ascending original id), which guarantees parent[i] < i. Among in-edges
/// from the previous BFS layer the highest-original-id parent is kept, so
/// extraction is deterministic. Throws ValidationError naming unreachable
/// followers when the graph is not quasi-strongly connected from the leader.
SpanningTree find_spanning_tree(const MatrixWeightedDigraph& graph);

/// Incidence matrix P0 of the tree, (N+1) x N over internal labels:
/// column i is +1 at row parent[i], -1 at row i, zero elsewhere.
Matrix incidence_matrix(const SpanningTree& tree);

/// Effective protocol weight of follower i (internal label): W_{i,k_i}
/// when the parent is a follower, D_i = W_{i0} when the parent is the
/// leader. Never their sum.
Matrix effective_weight(const SpanningTree& tree, const ValidatedSystem& system,
                        int follower_internal);

/// Laplacian of the DST-restricted network. Followers with a follower
/// parent contribute the diagonal/off-diagonal pair; leader-rooted
/// followers appear only in Delta and delta. Block lower triangular by
/// construction.
BlockLaplacian dst_laplacian(const SpanningTree& tree,
                             const ValidatedSystem& system);

/// Laplacian of the full follower network plus leader coupling for every
/// follower with a leader edge. Blocks indexed by internal labels.
BlockLaplacian full_laplacian(const SpanningTree& tree,
                              const ValidatedSystem& system);

}  // namespace consensus
