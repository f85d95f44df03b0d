#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>

#include "macgame/game.hpp"
#include "macgame/graph.hpp"
#include "macgame/payoff.hpp"
#include "macgame/simplex.hpp"

namespace macgame {

inline constexpr double kDefaultSupportTol = 1e-6;

/// Detailed first-order optimality data for a profile.
struct KktBreakdown {
  double residual = 0.0;
  /// lambda_k: the largest marginal payoff over the nodes user k may use.
  Vector multipliers;
  /// p(k, a) * (lambda_k - v(k, a)): complementary slackness products.
  Matrix slackness;
  /// lambda_k - (1/P_k) sum_a p(k, a) v(k, a), one entry per user.
  Vector per_user;
};

inline KktBreakdown kkt_breakdown(const Game& game, const Matrix& p) {
  const Matrix v = marginal_payoffs(game, p);
  const Index K = game.num_users();
  KktBreakdown out;
  out.multipliers.resize(K);
  out.per_user.resize(K);
  out.slackness = Matrix::Zero(K, game.num_nodes());
  for (Index k = 0; k < K; ++k) {
    double lambda = -std::numeric_limits<double>::infinity();
    for (Index a = 0; a < game.num_nodes(); ++a)
      if (game.allowed(k, a)) lambda = std::max(lambda, v(k, a));
    out.multipliers(k) = lambda;
    double gap = 0.0;
    for (Index a = 0; a < game.num_nodes(); ++a) {
      if (!game.allowed(k, a)) continue;
      const double s = p(k, a) * (lambda - v(k, a));
      out.slackness(k, a) = s;
      gap += s;
    }
    out.per_user(k) = gap / game.budget(k);
    out.residual = std::max(out.residual, out.per_user(k));
  }
  return out;
}

/**
 * max_k [lambda_k - v_k], with lambda_k = max_a v(k, a) and v_k the
 * P_k-weighted average of v(k, .). Zero exactly at Nash equilibria.
 */
inline double kkt_residual(const Game& game, const PowerProfile& profile) {
  return kkt_breakdown(game, profile.allocation()).residual;
}

/**
 * Water-filling best response of user k to the others' current allocations:
 * p(k, a) = max(0, w b_a - N_a / g(k, a)) with N_a the noise plus
 * interference user k sees at node a. The water level w is found by bisection
 * on the increasing budget function.
 */
inline Vector best_response(const Game& game, const Matrix& p, Index k) {
  const Index A = game.num_nodes();
  const double budget = game.budget(k);
  Vector floor_level(A);  // N_a / g(k, a)
  for (Index a = 0; a < A; ++a) {
    double n = game.noise()(a);
    for (Index l = 0; l < game.num_users(); ++l)
      if (l != k) n += game.gain(l, a) * p(l, a);
    floor_level(a) = n / game.gain(k, a);
  }
  const Vector& b = game.bandwidths();
  auto allocate = [&](double w) {
    Vector x = Vector::Zero(A);
    for (Index a = 0; a < A; ++a)
      if (game.allowed(k, a)) x(a) = std::max(0.0, w * b(a) - floor_level(a));
    return x;
  };

  double lo = 0.0;
  double hi = 0.0;
  {
    double num = budget, den = 0.0;
    for (Index a = 0; a < A; ++a)
      if (game.allowed(k, a)) {
        num += floor_level(a);
        den += b(a);
      }
    hi = num / den;  // allocate(hi) sums to at least the budget
  }
  Vector x = allocate(hi);
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    x = allocate(mid);
    const double total = x.sum();
    if (std::abs(total - budget) <= 1e-12 * budget) break;
    (total < budget ? lo : hi) = mid;
  }

  // with the active set identified, the water level has a closed form
  double num = budget, den = 0.0;
  for (Index a = 0; a < A; ++a)
    if (x(a) > 0.0) {
      num += floor_level(a);
      den += b(a);
    }
  if (den > 0.0) {
    const Vector polished = allocate(num / den);
    if (std::abs(polished.sum() - budget) <= std::abs(x.sum() - budget)) x = polished;
  }
  return x;
}

inline Vector best_response(const Game& game, const PowerProfile& profile, Index k) {
  return best_response(game, profile.allocation(), k);
}

struct EquilibriumReport {
  PowerProfile profile;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  double potential_value = 0.0;
  Vector multipliers;
  Mask support;
  Matrix slackness;
  bool forest = true;
  Index face_dim = 0;
  std::string solver;
  double tolerance = 0.0;
  double support_tol = kDefaultSupportTol;
  std::optional<std::uint64_t> seed;
};

struct SolverOptions {
  double tol = 1e-12;
  int max_iters = 200000;
  double support_tol = kDefaultSupportTol;
  double armijo = 1e-4;
  double initial_step = 1.0;
  std::optional<std::uint64_t> seed;  // recorded in the report only
};

namespace detail {

inline EquilibriumReport finish_report(const Game& game, Matrix p, int iterations,
                                       const std::string& solver, const SolverOptions& opts,
                                       bool fixed_point = false) {
  const KktBreakdown kkt = kkt_breakdown(game, p);
  PowerProfile profile(game, std::move(p));
  const Mask support = support_mask(profile, opts.support_tol);
  EquilibriumReport r{.profile = profile,
                      .kkt_residual = kkt.residual,
                      .iterations = iterations,
                      .converged = fixed_point || kkt.residual <= opts.tol,
                      .potential_value = potential(game, profile),
                      .multipliers = kkt.multipliers,
                      .support = support,
                      .slackness = kkt.slackness,
                      .forest = is_forest(profile_graph(support)),
                      .face_dim = equilibrium_face_dim(support),
                      .solver = solver,
                      .tolerance = opts.tol,
                      .support_tol = opts.support_tol,
                      .seed = opts.seed};
  return r;
}

inline Matrix project_rows(const Game& game, const Matrix& y) {
  Matrix out(y.rows(), y.cols());
  for (Index k = 0; k < y.rows(); ++k)
    out.row(k) = simplex_project(y.row(k).transpose(), game.budget(k), game.access().row(k))
                     .transpose();
  return out;
}

}  // namespace detail

/**
 * Projected gradient descent on the potential over the product of scaled
 * simplices. Each iteration moves along the marginal payoffs (the negative
 * gradient), projects every user back onto its simplex, and backtracks by
 * halving from `initial_step` until the Armijo condition holds.
 */
inline EquilibriumReport solve_potential_min(const Game& game,
                                             const std::optional<PowerProfile>& init = {},
                                             const SolverOptions& opts = {}) {
  Matrix p = init ? init->allocation() : uniform_profile(game).allocation();
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    const KktBreakdown kkt = kkt_breakdown(game, p);
    if (kkt.residual <= opts.tol) break;
    const Matrix v = marginal_payoffs(game, p);
    double step = opts.initial_step;
    bool accepted = false;
    Matrix cand;
    while (step > 1e-20) {
      cand = detail::project_rows(game, p + step * v);
      const Matrix d = cand - p;
      if (d.cwiseAbs().maxCoeff() == 0.0) break;
      // directional derivative of the merit, (lambda_k - v(k, a)) summed against d
      const double slope =
          ((-v).colwise() + kkt.multipliers).cwiseProduct(d).sum();
      if (merit_difference(game, p, cand, kkt.multipliers) <= opts.armijo * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // fixed point of the projected step, or stalled line search
    p = std::move(cand);
  }
  return detail::finish_report(game, std::move(p), it, "pgd", opts);
}

/**
 * Round-robin water-filling, users updated in index order within a round.
 * Converged once a round moves the profile by less than tol or the residual
 * reaches tol.
 */
inline EquilibriumReport solve_sequential_waterfilling(const Game& game,
                                                       const std::optional<PowerProfile>& init = {},
                                                       const SolverOptions& opts = {}) {
  Matrix p = init ? init->allocation() : uniform_profile(game).allocation();
  int rounds = 0;
  bool settled = false;  // a full round moved the profile by less than tol
  if (kkt_breakdown(game, p).residual > opts.tol) {
    while (rounds < opts.max_iters) {
      double moved = 0.0;
      for (Index k = 0; k < game.num_users(); ++k) {
        const Vector br = best_response(game, p, k);
        moved = std::max(moved, (br.transpose() - p.row(k)).cwiseAbs().maxCoeff());
        p.row(k) = br.transpose();
      }
      ++rounds;
      settled = moved < opts.tol;
      if (settled || kkt_breakdown(game, p).residual <= opts.tol) break;
    }
  }
  return detail::finish_report(game, std::move(p), rounds, "swf", opts, settled);
}

/// r_a = load_a / b_a; water-filling users have g(k, a) / g(k, b) = r_a / r_b on their support.
inline Vector waterfilling_levels(const Game& game, const PowerProfile& profile) {
  return (node_loads(game, profile.allocation()).array() / game.bandwidths().array()).matrix();
}

}  // namespace macgame
