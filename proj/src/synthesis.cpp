#include "consensus/synthesis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>

#include "consensus/model.hpp"

namespace consensus {

namespace {

template <typename Mat>
RowSumStats row_sums_impl(const Mat& H) {
  if (H.rows() == 0 || H.cols() == 0) return {0.0, 0.0};
  const auto sums = H.cwiseAbs().rowwise().sum();
  return {sums.maxCoeff(), sums.minCoeff()};
}

Matrix controllability_matrix(const Matrix& A, const Matrix& b) {
  const int n = static_cast<int>(A.rows());
  Matrix C(n, n);
  Matrix col = b;
  for (int k = 0; k < n; ++k) {
    C.col(k) = col;
    col = A * col;
  }
  return C;
}

/// Real coefficients of prod_k (s - t_k), descending powers, leading 1.
std::vector<double> real_char_poly(
    const std::vector<std::complex<double>>& targets) {
  std::vector<std::complex<double>> coeffs{1.0};
  for (const auto& t : targets) {
    std::vector<std::complex<double>> next(coeffs.size() + 1, 0.0);
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      next[i] += coeffs[i];
      next[i + 1] -= coeffs[i] * t;
    }
    coeffs = std::move(next);
  }
  double scale = 0.0;
  for (const auto& c : coeffs) scale = std::max(scale, std::abs(c));
  std::vector<double> out(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (std::abs(coeffs[i].imag()) > 1e-9 * std::max(1.0, scale)) {
      throw ValidationError(
          "pole targets must be closed under complex conjugation");
    }
    out[i] = coeffs[i].real();
  }
  return out;
}

Matrix ackermann(const Matrix& A, const Matrix& b,
                 const std::vector<std::complex<double>>& targets) {
  const int n = static_cast<int>(A.rows());
  const Matrix C = controllability_matrix(A, b);
  if (svd_rank(C) < n) {
    throw NumericError("uncontrollable pair: controllability matrix rank " +
                       std::to_string(svd_rank(C)) + " < " +
                       std::to_string(n));
  }
  const std::vector<double> coeffs = real_char_poly(targets);
  // phi(A) by Horner on descending coefficients.
  Matrix phi = Matrix::Zero(n, n);
  for (double c : coeffs) {
    phi = phi * A + c * Matrix::Identity(n, n);
  }
  Matrix e_last = Matrix::Zero(1, n);
  e_last(0, n - 1) = 1.0;
  // f = e_n^T C^-1 phi(A)
  const Matrix z = C.transpose().partialPivLu().solve(e_last.transpose());
  return z.transpose() * phi;
}

void verify_placement(const Matrix& A, const Matrix& B, const Matrix& F,
                      const std::vector<std::complex<double>>& targets) {
  Eigen::EigenSolver<Matrix> es(A - B * F, false);
  if (es.info() != Eigen::Success) {
    throw NumericError("eigensolver failed while verifying pole placement");
  }
  std::vector<std::complex<double>> got(es.eigenvalues().data(),
                                        es.eigenvalues().data() +
                                            es.eigenvalues().size());
  std::vector<std::complex<double>> want = targets;
  auto by_parts = [](const std::complex<double>& a,
                     const std::complex<double>& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  };
  std::sort(got.begin(), got.end(), by_parts);
  std::sort(want.begin(), want.end(), by_parts);
  double err = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) {
    err = std::max(err, std::abs(got[i] - want[i]));
  }
  if (err > 1e-6) {
    throw NumericError("pole placement missed targets by " +
                       std::to_string(err));
  }
}

}  // namespace

RowSumStats row_sum_norms(const Eigen::MatrixXcd& H) {
  return row_sums_impl(H);
}

RowSumStats row_sum_norms(const Matrix& H) { return row_sums_impl(H); }

Matrix place_poles(const Matrix& A, const Matrix& B,
                   const std::vector<std::complex<double>>& targets) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  if (static_cast<int>(targets.size()) != n) {
    throw ValidationError("need exactly n = " + std::to_string(n) +
                          " pole targets");
  }
  if (m == 1) {
    Matrix F = ackermann(A, B, targets);
    verify_placement(A, B, F, targets);
    return F;
  }

  // Deterministic direction sequence: axes first, then fixed pseudo-random.
  std::mt19937_64 rng(0x5DEECE66DULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 32; ++trial) {
    Vector v(m);
    if (trial < m) {
      v.setZero();
      v(trial) = 1.0;
    } else {
      for (int i = 0; i < m; ++i) v(i) = normal(rng);
      v.normalize();
    }
    const Matrix b = B * v;
    if (svd_rank(controllability_matrix(A, b)) < n) continue;
    const Matrix f = ackermann(A, b, targets);
    const Matrix F = v * f;
    verify_placement(A, B, F, targets);
    return F;
  }
  Matrix C(n, n * m);
  Matrix blk = B;
  for (int k = 0; k < n; ++k) {
    C.middleCols(k * m, m) = blk;
    blk = A * blk;
  }
  if (svd_rank(C) < n) throw NumericError("uncontrollable pair");
  throw NumericError(
      "no controllable single-input projection found within 32 trials");
}

Matrix design_K_dst(const AgentDynamics& agent, const Matrix& G_i,
                    const Matrix& W_eff, double rate) {
  if (rate <= 0) throw ValidationError("design rate must be positive");
  const int n = static_cast<int>(agent.A.rows());

  Eigen::JacobiSVD<Matrix> svd(W_eff);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (smin <= 0 || sv(0) / smin > 1e12) {
    throw NumericError(
        "effective weight not invertible: decentralized design infeasible "
        "by this route (condition number " +
        std::to_string(smin > 0 ? sv(0) / smin : 0.0) + ")");
  }

  std::vector<std::complex<double>> targets;
  targets.reserve(n);
  for (int k = 1; k <= n; ++k) targets.emplace_back(-rate * k, 0.0);

  const Matrix F = place_poles(agent.A - agent.B * G_i, agent.B, targets);
  // K = F * W_eff^-1, via W_eff^T x = F^T.
  const Matrix K =
      W_eff.transpose().partialPivLu().solve(F.transpose()).transpose();

  const HurwitzResult post =
      is_hurwitz(agent.A - agent.B * G_i - agent.B * K * W_eff);
  if (!post.verdict) {
    throw NumericError("designed block not Hurwitz (abscissa " +
                       std::to_string(post.spectral_abscissa) + ")");
  }
  return K;
}

GainSet design_gains(const ValidatedSystem& system, const SpanningTree& tree,
                     const std::vector<Matrix>& G, double rate) {
  GainSet gains;
  gains.G.resize(system.N);
  gains.K.resize(system.N);
  for (int orig = 1; orig <= system.N; ++orig) {
    gains.G[orig - 1] = orig - 1 < static_cast<int>(G.size()) && G[orig - 1].size()
                            ? G[orig - 1]
                            : Matrix::Zero(system.m, system.n);
  }
  for (int i = 1; i <= system.N; ++i) {
    const int orig = tree.to_original[i];
    const Matrix W_eff = effective_weight(tree, system, i);
    gains.K[orig - 1] =
        design_K_dst(system.agents[orig], gains.G[orig - 1], W_eff, rate);
  }
  return gains;
}

CriterionReport check_theorem1(const ValidatedSystem& system,
                               const SpanningTree& tree, const GainSet& gains,
                               const Tolerances& tol) {
  CriterionReport report;
  report.criterion = "theorem1";
  report.sufficient_only = false;

  bool all_ok = true;
  for (int i = 1; i <= system.N; ++i) {
    const int orig = tree.to_original[i];
    const AgentDynamics& ag = system.agents[orig];
    const Matrix W_eff = effective_weight(tree, system, i);
    const Matrix block = ag.A - ag.B * gains.G[orig - 1] -
                         ag.B * gains.K[orig - 1] * W_eff;
    const HurwitzResult h = is_hurwitz(block, tol.hurwitz_margin);
    report.per_block.push_back({orig,
                                "A" + std::to_string(orig) + "*-B" +
                                    std::to_string(orig) + "*",
                                h.verdict, h.spectral_abscissa});
    all_ok = all_ok && h.verdict;
  }
  std::sort(report.per_block.begin(), report.per_block.end(),
            [](const BlockVerdict& a, const BlockVerdict& b) {
              return a.follower < b.follower;
            });

  const ReducedSystem red =
      reduce(system, tree, gains, Protocol::kDst, tol.rank_tol_scale);
  const HurwitzResult t = is_hurwitz(red.tail, tol.hurwitz_margin);
  report.tail_block = {-1, "L1*Dbar*L3", t.verdict, t.spectral_abscissa};

  report.overall = all_ok && t.verdict;
  return report;
}

double gerschgorin_radius(int follower_internal, const ValidatedSystem& system,
                          const GainSet& gains, const SpanningTree& tree) {
  const int orig = tree.to_original[follower_internal];
  const AgentDynamics& ag = system.agents[orig];
  const Matrix BK = ag.B * gains.K[orig - 1];
  double radius = 0.0;
  for (int j : system.graph.in_neighbors(orig)) {
    if (j == 0) continue;  // leader edge sits in the diagonal block
    radius += row_sum_norms(Matrix(BK * *system.graph.find_weight(orig, j)))
                  .max_row_sum;
  }
  return radius;
}

double resolvent_gap(const Eigen::MatrixXcd& H) {
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(H);
  if (!lu.isInvertible()) return 0.0;
  const Eigen::MatrixXcd inv = lu.inverse();
  const double nrm = row_sum_norms(inv).max_row_sum;
  if (!std::isfinite(nrm) || nrm <= 0) return 0.0;
  return 1.0 / nrm;
}

RegionCheck region_clear_of_rhp(const Matrix& A_block, double radius,
                                int grid_steps, double margin) {
  const int n = static_cast<int>(A_block.rows());
  const double omega_max = row_sum_norms(A_block).max_row_sum + radius + 1.0;
  const double step = omega_max / grid_steps;
  const Eigen::MatrixXcd Ac = A_block.cast<std::complex<double>>();
  const Eigen::MatrixXcd In = Eigen::MatrixXcd::Identity(n, n);

  RegionCheck check;
  check.clear = true;
  check.worst_margin = std::numeric_limits<double>::infinity();
  for (int si = 0; si <= grid_steps; ++si) {
    const double sigma = si * step;
    for (int wi = -grid_steps; wi <= grid_steps; ++wi) {
      const std::complex<double> lambda(sigma, wi * step);
      const double gap = resolvent_gap(Ac - lambda * In);
      const double m = gap - radius;
      if (m < check.worst_margin) {
        check.worst_margin = m;
        check.worst_point = lambda;
      }
      if (gap <= radius + margin) check.clear = false;
    }
  }
  return check;
}

CriterionReport check_theorem2(const ValidatedSystem& system,
                               const SpanningTree& tree, const GainSet& gains,
                               const Tolerances& tol) {
  CriterionReport report;
  report.criterion = "theorem2";
  report.sufficient_only = true;
  report.gerschgorin.emplace();

  bool regions_ok = true;
  for (int i = 1; i <= system.N; ++i) {
    const int orig = tree.to_original[i];
    const AgentDynamics& ag = system.agents[orig];
    // Diagonal block A_i' - B_i': own-state feedback plus the full
    // neighbor weight sum, leader edge included.
    Matrix wsum = Matrix::Zero(system.n, system.n);
    for (int j : system.graph.in_neighbors(orig)) {
      wsum += *system.graph.find_weight(orig, j);
    }
    const Matrix block = ag.A - ag.B * gains.G[orig - 1] -
                         ag.B * gains.K[orig - 1] * wsum;
    const double radius = gerschgorin_radius(i, system, gains, tree);
    const RegionCheck rc = region_clear_of_rhp(block, radius,
                                               tol.gerschgorin_grid,
                                               tol.hurwitz_margin);
    report.gerschgorin->push_back(
        {orig, radius, rc.clear, rc.worst_point, rc.worst_margin});
    const HurwitzResult h = is_hurwitz(block, tol.hurwitz_margin);
    report.per_block.push_back({orig,
                                "A" + std::to_string(orig) + "'-B" +
                                    std::to_string(orig) + "'",
                                h.verdict, h.spectral_abscissa});
    regions_ok = regions_ok && rc.clear;
  }
  auto by_follower = [](const auto& a, const auto& b) {
    return a.follower < b.follower;
  };
  std::sort(report.per_block.begin(), report.per_block.end(), by_follower);
  std::sort(report.gerschgorin->begin(), report.gerschgorin->end(),
            by_follower);

  const ReducedSystem red =
      reduce(system, tree, gains, Protocol::kAllNeighbors, tol.rank_tol_scale);
  const HurwitzResult t = is_hurwitz(red.tail, tol.hurwitz_margin);
  report.tail_block = {-1, "L1*Dbar*L3", t.verdict, t.spectral_abscissa};

  // Lemma-3 route for comparison: plain eigenvalue test of M'.
  const ClosedLoopMatrix loop =
      closed_loop_matrix(system, tree, gains, Protocol::kAllNeighbors);
  const int Nn = system.N * system.n;
  const HurwitzResult direct = is_hurwitz(
      Matrix(loop.F.bottomRightCorner(Nn, Nn)), tol.hurwitz_margin);
  report.direct_mprime = {-1, "M'", direct.verdict, direct.spectral_abscissa};

  report.overall = regions_ok && t.verdict;
  return report;
}

}  // namespace consensus
