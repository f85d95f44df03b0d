#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "macgame/game.hpp"

namespace macgame {

/// S_max(k, l) = max_a g(l, a) / g(k, a) off the diagonal, zero on it.
inline Matrix s_max_matrix(const Game& game) {
  const Index K = game.num_users();
  Matrix s = Matrix::Zero(K, K);
  for (Index k = 0; k < K; ++k)
    for (Index l = 0; l < K; ++l)
      if (k != l) s(k, l) = (game.gains().row(l).array() / game.gains().row(k).array()).maxCoeff();
  return s;
}

/**
 * S(a)(k, l) = g(l, a) / g(k, a) off the diagonal, zero on it.
 *
 * `bad` optionally flags (user, node) channels considered unusable; a flagged
 * user has its row and column of S(a) zeroed.
 */
inline Matrix s_alpha_matrix(const Game& game, Index alpha, const Mask* bad = nullptr) {
  if (alpha < 0 || alpha >= game.num_nodes())
    throw DomainError("s_alpha_matrix: node index " + std::to_string(alpha) + " out of range");
  if (bad && (bad->rows() != game.num_users() || bad->cols() != game.num_nodes()))
    throw ShapeError("s_alpha_matrix: bad-channel mask must be K x A");
  const Index K = game.num_users();
  Matrix s = Matrix::Zero(K, K);
  for (Index k = 0; k < K; ++k)
    for (Index l = 0; l < K; ++l) {
      if (k == l) continue;
      if (bad && ((*bad)(k, alpha) || (*bad)(l, alpha))) continue;
      s(k, l) = game.gain(l, alpha) / game.gain(k, alpha);
    }
  return s;
}

/// Largest eigenvalue modulus of a square matrix, computed with a dense eigensolver.
inline double dense_spectral_radius(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/**
 * Spectral radius of an entrywise non-negative matrix by power iteration from
 * a random positive start. The iteration has converged when the eigenpair
 * residual |M x - rho x| drops below tol * rho; when it does not (periodic or
 * reducible matrices, e.g. every 2 x 2 matrix with zero diagonal) the dense
 * eigensolver decides.
 */
inline double spectral_radius(const Matrix& m, double tol = 1e-12, int max_iters = 2000) {
  if (m.rows() != m.cols()) throw ShapeError("spectral_radius: matrix must be square");
  const Index n = m.rows();
  if (n == 0) return 0.0;
  if ((m.array() < 0.0).any()) return dense_spectral_radius(m);
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> law(0.5, 1.5);
  Vector x(n);
  for (Index i = 0; i < n; ++i) x(i) = law(rng);
  x.normalize();
  for (int it = 0; it < max_iters; ++it) {
    Vector y = m * x;
    const double rho = y.norm();
    if (rho == 0.0) return 0.0;
    if ((y - rho * x).norm() <= tol * rho) return rho;
    x = y / rho;
  }
  return dense_spectral_radius(m);
}

/// Numerical rank: singular values above rel_tol times the largest.
inline Index numerical_rank(const Matrix& m, double rel_tol = 1e-10) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * sv(0)) ++r;
  return r;
}

struct SpectralBound {
  double value = 0.0;
  Index rank = 0;
  bool applicable = false;  // the bound needs rank >= 2
};

/**
 * Trace lower bound on the spectral radius with S = rank(M):
 *   |tr M| / S + sqrt((tr M^2 - (tr M)^2 / S) / (S (S - 1))).
 * Returns value 0 and applicable = false when S < 2.
 */
inline SpectralBound spectral_lower_bound(const Matrix& m, double rank_tol = 1e-10) {
  if (m.rows() != m.cols()) throw ShapeError("spectral_lower_bound: matrix must be square");
  SpectralBound out;
  out.rank = numerical_rank(m, rank_tol);
  if (out.rank < 2) return out;
  const double s = double(out.rank);
  const double tr = m.trace();
  const double tr2 = (m * m).trace();
  const double spread = std::max(0.0, (tr2 - tr * tr / s) / (s * (s - 1.0)));
  out.value = std::abs(tr) / s + std::sqrt(spread);
  out.applicable = true;
  return out;
}

/// Constraint-matrix rank and the dimension of potential-flat tangent directions.
struct Degeneracy {
  Index index = 0;
  Index constraint_rank = 0;
};

/**
 * Stacks the K per-user tangency rows (sum_a z(k, a) = 0) over the A
 * gain-weighted per-node rows (sum_k g(k, a) z(k, a) = 0) into a
 * (K + A) x KA matrix; the index is KA minus its numerical rank.
 */
inline Matrix degeneracy_constraints(const Game& game) {
  const Index K = game.num_users(), A = game.num_nodes();
  Matrix c = Matrix::Zero(K + A, K * A);
  for (Index k = 0; k < K; ++k)
    for (Index a = 0; a < A; ++a) {
      c(k, k * A + a) = 1.0;
      c(K + a, k * A + a) = game.gain(k, a);
    }
  return c;
}

inline Degeneracy degeneracy_index(const Game& game, double rank_tol = 1e-10) {
  if (!(rank_tol > 0.0)) throw DomainError("degeneracy_index: rank_tol must be positive");
  Degeneracy d;
  d.constraint_rank = numerical_rank(degeneracy_constraints(game), rank_tol);
  d.index = game.num_users() * game.num_nodes() - d.constraint_rank;
  return d;
}

/// Degeneracy index of a game with generic gains.
inline Index generic_degeneracy_index(Index K, Index A) { return std::max<Index>(0, K * A - K - A); }

struct ConditionReport {
  double rho_smax = 0.0;
  Vector rho_s_alpha;
  bool cmax_holds = false;
  bool c1_holds = false;
  bool c2_holds = false;
  /// smallest eigenvalue of I + (S(a) + S(a)^T) / 2, per node
  Vector c2_min_eigenvalue;
  SpectralBound spectral_lower_bound;  // for S_max
  Index degeneracy_index = 0;
  Index constraint_rank = 0;
};

struct ConditionOptions {
  double power_tol = 1e-12;
  double rank_tol = 1e-10;
  // radii within margin of 1 and C2 eigenvalues within margin of 0 count as failing
  double margin = 1e-9;
  const Mask* bad_channels = nullptr;
};

/// Audits the spectral (Cmax, C1) and definiteness (C2) uniqueness conditions.
inline ConditionReport check_conditions(const Game& game, const ConditionOptions& opts = {}) {
  const Index K = game.num_users(), A = game.num_nodes();
  ConditionReport r;
  const Matrix smax = s_max_matrix(game);
  r.rho_smax = spectral_radius(smax, opts.power_tol);
  r.cmax_holds = r.rho_smax < 1.0 - opts.margin;
  r.spectral_lower_bound = spectral_lower_bound(smax, opts.rank_tol);
  r.rho_s_alpha.resize(A);
  r.c2_min_eigenvalue.resize(A);
  r.c1_holds = true;
  r.c2_holds = true;
  for (Index a = 0; a < A; ++a) {
    const Matrix s = s_alpha_matrix(game, a, opts.bad_channels);
    r.rho_s_alpha(a) = spectral_radius(s, opts.power_tol);
    if (!(r.rho_s_alpha(a) < 1.0 - opts.margin)) r.c1_holds = false;
    const Matrix sym = Matrix::Identity(K, K) + 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    r.c2_min_eigenvalue(a) = es.eigenvalues().minCoeff();
    if (!(r.c2_min_eigenvalue(a) > opts.margin)) r.c2_holds = false;
  }
  const Degeneracy d = degeneracy_index(game, opts.rank_tol);
  r.degeneracy_index = d.index;
  r.constraint_rank = d.constraint_rank;
  return r;
}

}  // namespace macgame
