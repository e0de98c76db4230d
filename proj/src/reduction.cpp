#include "consensus/reduction.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "consensus/model.hpp"

namespace consensus {

Matrix kron(const Matrix& A, const Matrix& B) {
  Matrix out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    }
  }
  return out;
}

int svd_rank(const Matrix& M, double scale, double* tol_out) {
  if (M.size() == 0) {
    if (tol_out) *tol_out = 0.0;
    return 0;
  }
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& sv = svd.singularValues();
  const double tol = static_cast<double>(std::max(M.rows(), M.cols())) *
                     std::numeric_limits<double>::epsilon() *
                     (sv.size() ? sv(0) : 0.0) * scale;
  if (tol_out) *tol_out = tol;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) ++rank;
  }
  return rank;
}

ClosedLoopMatrix closed_loop_matrix(const ValidatedSystem& system,
                                    const SpanningTree& tree,
                                    const GainSet& gains, Protocol protocol) {
  const int N = system.N;
  const int n = system.n;
  const int m = system.m;
  if (static_cast<int>(gains.G.size()) != N ||
      static_cast<int>(gains.K.size()) != N) {
    throw ValidationError("need one G and one K per follower");
  }
  for (int f = 0; f < N; ++f) {
    if (gains.G[f].rows() != m || gains.G[f].cols() != n ||
        gains.K[f].rows() != m || gains.K[f].cols() != n) {
      throw ValidationError("gain " + std::to_string(f + 1) + " must be " +
                            std::to_string(m) + "x" + std::to_string(n));
    }
  }

  const BlockLaplacian lap = protocol == Protocol::kDst
                                 ? dst_laplacian(tree, system)
                                 : full_laplacian(tree, system);

  ClosedLoopMatrix loop;
  loop.protocol = protocol;
  loop.F = Matrix::Zero((N + 1) * n, (N + 1) * n);
  loop.F.topLeftCorner(n, n) = system.agents[0].A;
  loop.B_stack = Matrix::Zero((N + 1) * n, m);
  loop.B_stack.topRows(n) = system.agents[0].B;

  for (int i = 1; i <= N; ++i) {
    const int orig = tree.to_original[i];
    const AgentDynamics& ag = system.agents[orig];
    const Matrix& Gi = gains.G[orig - 1];
    const Matrix& Ki = gains.K[orig - 1];
    const Matrix BK = ag.B * Ki;
    const int r = i * n;
    const int rl = (i - 1) * n;  // row in the Laplacian's follower indexing
    for (int j = 1; j <= N; ++j) {
      const Matrix coupling = lap.L.block(rl, (j - 1) * n, n, n) +
                              lap.Delta.block(rl, (j - 1) * n, n, n);
      if (i == j) {
        loop.F.block(r, j * n, n, n) = ag.A - ag.B * Gi - BK * coupling;
      } else {
        loop.F.block(r, j * n, n, n) = -BK * coupling;
      }
    }
    loop.F.block(r, 0, n, n) = BK * lap.delta.block(rl, 0, n, n);
  }
  return loop;
}

Matrix transform_factor(const SpanningTree& tree) {
  const int N = tree.follower_count();
  Matrix Q = Matrix::Zero(N + 1, N + 1);
  const Matrix P0 = incidence_matrix(tree);
  Q.topRows(N) = P0.transpose();
  Q(N, 0) = 1.0;
  return Q;
}

Matrix transform_factor_inverse(const SpanningTree& tree) {
  const int N = tree.follower_count();
  const Matrix Q = transform_factor(tree);
  // P0~ = columns 1..N of the incidence rows; lower triangular with -1
  // diagonal under the k_i < i labeling, so its inverse is exact.
  const Matrix P0t = Q.block(0, 1, N, N);
  const Matrix P0t_inv =
      P0t.triangularView<Eigen::Lower>().solve(Matrix::Identity(N, N));
  Matrix Qinv = Matrix::Zero(N + 1, N + 1);
  Qinv(0, N) = 1.0;
  Qinv.block(1, 0, N, N) = P0t_inv;
  Qinv.block(1, N, N, 1) = Matrix::Ones(N, 1);
  return Qinv;
}

TransformResult transform(const ClosedLoopMatrix& loop,
                          const SpanningTree& tree) {
  const int N = tree.follower_count();
  const int n = static_cast<int>(loop.F.rows()) / (N + 1);
  const Matrix In = Matrix::Identity(n, n);
  const Matrix P = kron(transform_factor(tree), In);
  const Matrix Pinv = kron(transform_factor_inverse(tree), In);
  const Matrix T = P * loop.F * Pinv;

  const double leak = T.block(N * n, 0, n, N * n).cwiseAbs().maxCoeff();
  if (leak > 1e-9) {
    throw NumericError("transform: leader row couples to followers (|.| = " +
                       std::to_string(leak) + "), construction bug");
  }

  TransformResult tr;
  tr.Abar = T.topLeftCorner(N * n, N * n);
  tr.Ahat = T.topRightCorner(N * n, n);
  tr.Bhat = (P * loop.B_stack).topRows(N * n);
  return tr;
}

EtaMatrices eta_matrices(const TransformResult& tr,
                         const AgentDynamics& leader) {
  const int n = static_cast<int>(leader.A.rows());
  const int m = static_cast<int>(leader.B.cols());
  EtaMatrices eta;
  eta.Bbar = Matrix(tr.Ahat.rows(), n + m);
  eta.Bbar << tr.Ahat, tr.Bhat;
  eta.Dbar = Matrix::Zero(n + m, n + m);
  eta.Dbar.topLeftCorner(n, n) = leader.A;
  eta.Dbar.block(0, n, n, m) = leader.B;
  return eta;
}

ObservabilityResult observability_sequence(const Matrix& Bbar,
                                           const Matrix& Dbar,
                                           double rank_tol_scale) {
  const int nm = static_cast<int>(Dbar.rows());
  std::vector<Matrix> blocks;
  blocks.reserve(nm);
  Matrix cur = Bbar;
  for (int k = 0; k < nm; ++k) {
    blocks.push_back(cur);
    cur = cur * Dbar;
  }

  auto stack = [&](int upto) {
    Matrix V(Bbar.rows() * (upto + 1), nm);
    for (int k = 0; k <= upto; ++k) {
      V.middleRows(k * Bbar.rows(), Bbar.rows()) = blocks[k];
    }
    return V;
  };

  std::vector<int> ranks(nm);
  for (int k = 0; k < nm; ++k) ranks[k] = svd_rank(stack(k), rank_tol_scale);

  int s = nm - 1;  // Cayley-Hamilton: ranks have stabilized here at latest
  for (int k = 0; k + 1 < nm; ++k) {
    if (ranks[k] == ranks[k + 1]) {
      s = k;
      break;
    }
  }

  ObservabilityResult res;
  res.Vs = stack(s);
  res.s = s;
  res.h = ranks[s];
  svd_rank(res.Vs, rank_tol_scale, &res.tol);
  return res;
}

Matrix extract_L1(const Matrix& Vs, double tol, int expected_rank) {
  std::vector<int> kept;
  Matrix acc(0, Vs.cols());
  for (Eigen::Index r = 0; r < Vs.rows(); ++r) {
    Matrix cand(acc.rows() + 1, Vs.cols());
    if (acc.rows() > 0) cand.topRows(acc.rows()) = acc;
    cand.bottomRows(1) = Vs.row(r);
    // Independence within tol: singular values of the extended stack.
    Eigen::JacobiSVD<Matrix> svd(cand);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > tol) ++rank;
    }
    if (rank > static_cast<int>(acc.rows())) {
      acc = cand;
      kept.push_back(static_cast<int>(r));
    }
  }
  if (static_cast<int>(acc.rows()) != expected_rank) {
    throw NumericError("extract_L1 kept " + std::to_string(acc.rows()) +
                       " rows but rank V_s = " + std::to_string(expected_rank) +
                       " (rank tolerance " + std::to_string(tol) + ")");
  }
  return acc;
}

Matrix extract_L3(const Matrix& L1, double tol) {
  const int h = static_cast<int>(L1.rows());
  const int nm = static_cast<int>(L1.cols());
  if (h == 0) return Matrix::Zero(nm, 0);

  std::vector<int> cols;
  Matrix acc(h, 0);
  for (int c = 0; c < nm && static_cast<int>(cols.size()) < h; ++c) {
    Matrix cand(h, acc.cols() + 1);
    if (acc.cols() > 0) cand.leftCols(acc.cols()) = acc;
    cand.rightCols(1) = L1.col(c);
    Eigen::JacobiSVD<Matrix> svd(cand);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > tol) ++rank;
    }
    if (rank > static_cast<int>(acc.cols())) {
      acc = cand;
      cols.push_back(c);
    }
  }
  if (static_cast<int>(cols.size()) != h) {
    throw NumericError(
        "extract_L3: no invertible column subset of L1 found (internal "
        "error, L1 should have full row rank)");
  }

  const Matrix L2 = acc;
  const Matrix L2inv = L2.partialPivLu().solve(Matrix::Identity(h, h));
  Matrix L3 = Matrix::Zero(nm, h);
  for (int j = 0; j < h; ++j) L3.row(cols[j]) = L2inv.row(j);

  const double err = (L1 * L3 - Matrix::Identity(h, h)).cwiseAbs().maxCoeff();
  if (err > 1e-10) {
    throw NumericError("extract_L3: L1*L3 deviates from identity by " +
                       std::to_string(err));
  }
  return L3;
}

ReducedSystem reduce(const ValidatedSystem& system, const SpanningTree& tree,
                     const GainSet& gains, Protocol protocol,
                     double rank_tol_scale) {
  const ClosedLoopMatrix loop =
      closed_loop_matrix(system, tree, gains, protocol);
  const TransformResult tr = transform(loop, tree);
  const EtaMatrices eta = eta_matrices(tr, system.agents[0]);
  const ObservabilityResult obs =
      observability_sequence(eta.Bbar, eta.Dbar, rank_tol_scale);

  ReducedSystem red;
  red.Abar = tr.Abar;
  red.Ahat = tr.Ahat;
  red.Bhat = tr.Bhat;
  red.Bbar = eta.Bbar;
  red.Dbar = eta.Dbar;
  red.Vs = obs.Vs;
  red.s = obs.s;
  red.h = obs.h;
  red.rank_tol = obs.tol;
  red.L1 = extract_L1(obs.Vs, obs.tol, obs.h);
  red.L3 = extract_L3(red.L1, obs.tol);
  red.tail = red.L1 * red.Dbar * red.L3;
  red.Mbar = auxiliary_matrix(red);
  return red;
}

Matrix auxiliary_matrix(const ReducedSystem& red) {
  const int Nn = static_cast<int>(red.Abar.rows());
  const int h = red.h;
  Matrix Mbar = Matrix::Zero(Nn + h, Nn + h);
  Mbar.topLeftCorner(Nn, Nn) = red.Abar;
  if (h > 0) {
    Mbar.topRightCorner(Nn, h) = red.Bbar * red.L3;
    Mbar.bottomRightCorner(h, h) = red.L1 * red.Dbar * red.L3;
  }
  return Mbar;
}

HurwitzResult is_hurwitz(const Matrix& H, double margin) {
  if (H.rows() != H.cols()) {
    throw ValidationError("is_hurwitz: matrix must be square");
  }
  if (!H.allFinite()) {
    throw ValidationError("is_hurwitz: non-finite entry");
  }
  if (H.rows() == 0) {
    return {true, -std::numeric_limits<double>::infinity()};
  }
  Eigen::EigenSolver<Matrix> es(H, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw NumericError("eigensolver failed to converge");
  }
  const double abscissa = es.eigenvalues().real().maxCoeff();
  return {abscissa < -margin, abscissa};
}

}  // namespace consensus
