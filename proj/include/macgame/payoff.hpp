#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

#include "macgame/game.hpp"

namespace macgame {

// All logarithms are natural; payoffs are in nats.

/// sigma^2_a + sum_k g(k, a) p(k, a) for every node.
inline Vector node_loads(const Game& game, const Matrix& p) {
  return game.noise() + game.gains().cwiseProduct(p).colwise().sum().transpose();
}

/// Spectral efficiency user k obtains at node a (single-user decoding).
inline double utility_per_node(const Game& game, const PowerProfile& profile, Index k, Index a) {
  const Matrix& p = profile.allocation();
  const double signal = game.gain(k, a) * p(k, a);
  if (signal == 0.0) return 0.0;
  double interference = game.noise()(a);
  for (Index l = 0; l < game.num_users(); ++l)
    if (l != k) interference += game.gain(l, a) * p(l, a);
  return game.bandwidths()(a) * std::log1p(signal / interference);
}

inline double utility(const Game& game, const PowerProfile& profile, Index k) {
  double u = 0.0;
  for (Index a = 0; a < game.num_nodes(); ++a) u += utility_per_node(game, profile, k, a);
  return u;
}

/// Exact potential, minimized at Nash equilibria: -sum_a b_a log(load_a).
inline double potential(const Game& game, const PowerProfile& profile) {
  const Vector load = node_loads(game, profile.allocation());
  return -(game.bandwidths().array() * load.array().log()).sum();
}

/// potential(to) - potential(from), computed without cancellation.
inline double potential_difference(const Game& game, const Matrix& from, const Matrix& to) {
  const Vector load = node_loads(game, from);
  const Vector delta = game.gains().cwiseProduct(to - from).colwise().sum().transpose();
  double d = 0.0;
  for (Index a = 0; a < game.num_nodes(); ++a)
    d -= game.bandwidths()(a) * std::log1p(delta(a) / load(a));
  return d;
}

/// x - log(1 + x), accurate for small |x|.
inline double log1p_remainder(double x) {
  if (std::abs(x) < 1e-3) {
    // alternating series x^2/2 - x^3/3 + ...
    double term = x * x, sum = 0.0;
    for (int n = 2; n < 12; ++n) {
      sum += (n % 2 == 0 ? term : -term) / double(n);
      term *= x;
    }
    return sum;
  }
  return x - std::log1p(x);
}

/**
 * Change of the Lagrangian merit Phi(p) + sum_k lambda_k (sum_a p(k, a) - P_k)
 * between `from` and `to`. On the product of simplices it equals the change
 * of the potential, but it is free of the cancellation between the linear
 * terms that makes a plain difference of potentials useless near a minimum.
 */
inline double merit_difference(const Game& game, const Matrix& from, const Matrix& to,
                               const Vector& lambda) {
  const Vector load = node_loads(game, from);
  const Matrix d = to - from;
  const Vector delta = game.gains().cwiseProduct(d).colwise().sum().transpose();
  double change = 0.0;
  for (Index a = 0; a < game.num_nodes(); ++a) {
    const double scale = game.bandwidths()(a) / load(a);
    for (Index k = 0; k < game.num_users(); ++k)
      change += (lambda(k) - scale * game.gain(k, a)) * d(k, a);
    change += game.bandwidths()(a) * log1p_remainder(delta(a) / load(a));
  }
  return change;
}

/// v(k, a) = -dPhi/dp(k, a) = b_a g(k, a) / load_a.
inline Matrix marginal_payoffs(const Game& game, const Matrix& p) {
  const Vector load = node_loads(game, p);
  Matrix v(game.num_users(), game.num_nodes());
  for (Index a = 0; a < game.num_nodes(); ++a)
    v.col(a) = game.gains().col(a) * (game.bandwidths()(a) / load(a));
  return v;
}

inline Matrix marginal_payoffs(const Game& game, const PowerProfile& profile) {
  return marginal_payoffs(game, profile.allocation());
}

using PotentialFn = std::function<double(const Game&, const PowerProfile&)>;

/**
 * |(u_k(p') - u_k(p)) - (Phi(p) - Phi(p'))| for the unilateral deviation of
 * user k from row k of `profile` to `deviation`.
 */
inline double potential_identity_gap(const Game& game, const PowerProfile& profile, Index k,
                                     const Eigen::RowVectorXd& deviation,
                                     const PotentialFn& phi = potential) {
  Matrix moved = profile.allocation();
  moved.row(k) = deviation;
  const PowerProfile other = PowerProfile::unchecked(std::move(moved));
  const double du = utility(game, other, k) - utility(game, profile, k);
  const double dphi = phi(game, profile) - phi(game, other);
  return std::abs(du - dphi);
}

struct PotentialCheck {
  bool holds = true;
  double max_deviation = 0.0;
};

/// Samples unilateral deviations and checks the exact-potential identity.
inline PotentialCheck verify_exact_potential(const Game& game, int num_samples, std::uint64_t seed,
                                             double tol, const PotentialFn& phi = potential) {
  if (!(tol > 0.0)) throw DomainError("verify_exact_potential: tol must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> pick_user(0, game.num_users() - 1);
  PotentialCheck out;
  for (int s = 0; s < num_samples; ++s) {
    const PowerProfile p = random_interior_profile(game, rng);
    const Index k = pick_user(rng);
    const PowerProfile q = random_interior_profile(game, rng);
    const double gap = potential_identity_gap(game, p, k, q.allocation().row(k), phi);
    out.max_deviation = std::max(out.max_deviation, gap);
  }
  out.holds = out.max_deviation <= tol;
  return out;
}

}  // namespace macgame
