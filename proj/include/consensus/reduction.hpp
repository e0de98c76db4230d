#pragma once

#include "consensus/types.hpp"

namespace consensus {

/// Stacked closed-loop drift over [x_0; x_1..x_N] (internal labels) and
/// the stacked leader-input column. The leader block row never couples to
/// followers.
struct ClosedLoopMatrix {
  Matrix F;        // (N+1)n x (N+1)n
  Matrix B_stack;  // (N+1)n x m, B_0 on top
  Protocol protocol = Protocol::kDst;
};

/// Output of the DST-based linear transformation.
struct TransformResult {
  Matrix Abar;  // Nn x Nn drift of the edge-difference coordinates y
  Matrix Ahat;  // Nn x n forcing of y by the leader state
  Matrix Bhat;  // Nn x m forcing of y by the leader input
};

struct EtaMatrices {
  Matrix Bbar;  // [Ahat | Bhat], Nn x (n+m)
  Matrix Dbar;  // [[A_0, B_0], [0, 0]], (n+m) x (n+m)
};

struct ObservabilityResult {
  Matrix Vs;       // stacked Bbar * Dbar^k blocks, k = 0..s
  int s = 0;       // first k with rank V_k == rank V_{k+1}
  int h = 0;       // rank V_s
  double tol = 0;  // SVD rank threshold in effect
};

/// Everything the auxiliary-system criterion needs, in one bundle.
struct ReducedSystem {
  Matrix Abar, Ahat, Bhat, Bbar, Dbar, Vs;
  int s = 0, h = 0;
  Matrix L1;    // h x (n+m), independent rows of Vs
  Matrix L3;    // (n+m) x h, scattered inverse of the pivot columns
  Matrix tail;  // L1 * Dbar * L3, h x h
  Matrix Mbar;  // [[Abar, Bbar*L3], [0, tail]]
  double rank_tol = 0;
};

struct HurwitzResult {
  bool verdict = false;
  double spectral_abscissa = 0;
};

/// Assembles F for the chosen protocol: leader block A_0, follower block
/// M = A_D - B_D (G_D + K_D L + K_D Delta) and leader coupling B_D K_D delta.
ClosedLoopMatrix closed_loop_matrix(const ValidatedSystem& system,
                                    const SpanningTree& tree,
                                    const GainSet& gains, Protocol protocol);

/// Applies y = (tree differences), x_0 passthrough: T = P F P^-1 with
/// P = [P0 e_1]^T (x) I_n. P^-1 comes from the closed form
/// [[0, 1], [P0~^-1, 1_N]] (x) I_n, which is exact for a tree. Throws
/// NumericError if the bottom-left block of T exceeds 1e-9 (leader autonomy
/// would be broken, signalling a construction bug).
TransformResult transform(const ClosedLoopMatrix& loop,
                          const SpanningTree& tree);

/// The (N+1) x (N+1) integer transformation factor [P0 e_1]^T and its exact
/// closed-form inverse. Exposed for property tests.
Matrix transform_factor(const SpanningTree& tree);
Matrix transform_factor_inverse(const SpanningTree& tree);

EtaMatrices eta_matrices(const TransformResult& tr, const AgentDynamics& leader);

/// V_k = [Bbar; Bbar Dbar; ...; Bbar Dbar^k] for k = 0..n+m-1. Returns the
/// smallest s with rank V_s == rank V_{s+1}; if ranks never repeat below
/// n+m-1 they have stabilized there by Cayley-Hamilton. Rank threshold is
/// max(rows, cols) * eps * sigma_max, scaled by rank_tol_scale.
ObservabilityResult observability_sequence(const Matrix& Bbar,
                                           const Matrix& Dbar,
                                           double rank_tol_scale = 1.0);

/// Top-down row scan of Vs keeping each row that is independent (within
/// tol) of the rows kept before it. Throws NumericError when the kept-row
/// count disagrees with expected_rank.
Matrix extract_L1(const Matrix& Vs, double tol, int expected_rank);

/// Greedy left-to-right scan for h independent columns of L1; row i_j of
/// L3 is row j of the inverse of that column submatrix, all other rows
/// exactly zero. Verifies L1 * L3 == I_h to 1e-10.
Matrix extract_L3(const Matrix& L1, double tol);

/// Full pipeline: closed loop -> transform -> eta -> observability ->
/// L1/L3 -> tail -> Mbar.
ReducedSystem reduce(const ValidatedSystem& system, const SpanningTree& tree,
                     const GainSet& gains, Protocol protocol,
                     double rank_tol_scale = 1.0);

Matrix auxiliary_matrix(const ReducedSystem& red);

/// All eigenvalues strictly left of -margin. The empty matrix is Hurwitz
/// with abscissa -inf.
HurwitzResult is_hurwitz(const Matrix& H, double margin = 1e-9);

/// Rank by singular values; threshold (reported via tol_out) is
/// max(rows, cols) * eps * sigma_max * scale.
int svd_rank(const Matrix& M, double scale = 1.0, double* tol_out = nullptr);

/// Kronecker product, dense.
Matrix kron(const Matrix& A, const Matrix& B);

}  // namespace consensus
