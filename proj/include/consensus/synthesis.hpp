#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "consensus/reduction.hpp"
#include "consensus/types.hpp"

namespace consensus {

struct BlockVerdict {
  int follower = 0;      // original follower id; -1 for non-block entries
  std::string block_id;  // e.g. "A1*-B1*"
  bool verdict = false;
  double abscissa = 0;
};

struct GerschgorinEntry {
  int follower = 0;  // original id
  double radius = 0;
  bool region_clear = false;
  std::complex<double> worst_point{0, 0};
  double worst_gap = 0;  // resolvent gap minus radius at the worst point
};

/// Verdict structure shared by both theorem checks. overall is the
/// conjunction of every component verdict of the criterion itself;
/// direct_mprime (all-neighbors only) reports the plain eigenvalue test of
/// M' so conservatism of the sufficient route is visible.
struct CriterionReport {
  std::string criterion;        // "theorem1" | "theorem2"
  bool sufficient_only = false; // theorem2 is sufficient, not iff
  std::vector<BlockVerdict> per_block;
  BlockVerdict tail_block;      // L1 * Dbar * L3
  std::optional<std::vector<GerschgorinEntry>> gerschgorin;
  std::optional<BlockVerdict> direct_mprime;
  bool overall = false;
};

struct RowSumStats {
  double max_row_sum = 0;
  double min_row_sum = 0;
};

/// Max and min absolute row sums (complex modulus for complex input).
RowSumStats row_sum_norms(const Eigen::MatrixXcd& H);
RowSumStats row_sum_norms(const Matrix& H);

/// Places the spectrum of A - B*F at the given self-conjugate targets.
/// Single-input: Ackermann's formula. Multi-input: project b = B*v over a
/// deterministic sequence of directions (axis vectors, then fixed
/// pseudo-random ones, at most 32 trials) until (A, b) is controllable,
/// place the single-input gain f and return v*f. Placement is verified to
/// 1e-6. Throws NumericError for uncontrollable pairs or when no
/// controllable projection exists within the budget.
Matrix place_poles(const Matrix& A, const Matrix& B,
                   const std::vector<std::complex<double>>& targets);

/// Decentralized gain for one follower: pole placement on
/// (A - B*G, B) at targets {-rate, -2*rate, ..., -n*rate}, then
/// K = F * W_eff^-1. Requires cond(W_eff) < 1e12. The returned gain is
/// verified to make A - B*G - B*K*W_eff Hurwitz.
Matrix design_K_dst(const AgentDynamics& agent, const Matrix& G_i,
                    const Matrix& W_eff, double rate);

/// Designs K for every follower via design_K_dst with the tree's effective
/// weights. G entries are taken from `G` when provided, zero otherwise.
GainSet design_gains(const ValidatedSystem& system, const SpanningTree& tree,
                     const std::vector<Matrix>& G, double rate);

/// Theorem-1 criterion: every diagonal block A_i - B_i G_i - B_i K_i W_eff,i
/// Hurwitz and the tail L1 * Dbar * L3 Hurwitz. Necessary and sufficient
/// for the DST protocol.
CriterionReport check_theorem1(const ValidatedSystem& system,
                               const SpanningTree& tree, const GainSet& gains,
                               const Tolerances& tol = {});

/// Radius of follower i's block Gerschgorin circle: sum of max-row-sum
/// norms of B_i K_i W_ij over follower in-neighbors j != i. The leader
/// edge sits in the diagonal block, never in the radius.
double gerschgorin_radius(int follower_internal, const ValidatedSystem& system,
                          const GainSet& gains, const SpanningTree& tree);

/// (||(H)^-1||_inf)^-1 with 0 for a singular matrix: the resolvent gap that
/// the block Gerschgorin region is built from.
double resolvent_gap(const Eigen::MatrixXcd& H);

struct RegionCheck {
  bool clear = false;
  std::complex<double> worst_point{0, 0};
  double worst_margin = 0;  // min over grid of gap - radius
};

/// Samples the closed right half plane over sigma in [0, Omega],
/// omega in [-Omega, Omega] with Omega = max-row-sum(A_block) + radius + 1
/// (outside that disc the gap exceeds the radius, so the region cannot
/// reach). The region is clear iff the resolvent gap of A_block - lambda*I
/// stays above radius + margin at every grid point; the check is exact only
/// up to grid resolution.
RegionCheck region_clear_of_rhp(const Matrix& A_block, double radius,
                                int grid_steps = 400, double margin = 1e-9);

/// Theorem-2 criterion (sufficient only): tail Hurwitz and every follower's
/// block Gerschgorin region clear of the closed right half plane. The
/// direct eigenvalue test of M' is reported alongside.
CriterionReport check_theorem2(const ValidatedSystem& system,
                               const SpanningTree& tree, const GainSet& gains,
                               const Tolerances& tol = {});

}  // namespace consensus
