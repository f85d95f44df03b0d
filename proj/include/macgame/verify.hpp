#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "macgame/dynamics.hpp"
#include "macgame/equilibrium.hpp"
#include "macgame/payoff.hpp"

// Runtime invariant checks for a single game, used by `macgame verify`.

namespace macgame {

struct InvariantResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      // worst observed quantity
  double threshold = 0.0;  // what it was compared against
};

struct VerifyOptions {
  int samples = 1000;
  std::uint64_t seed = 1;
  double potential_tol = 1e-8;
  double gradient_rel_tol = 1e-5;
  double fd_eps = 1e-6;
  double convexity_slack = 1e-12;
  double node_sum_rel_tol = 1e-12;
  double stationary_tol = 1e-10;
  double equilibrium_tol = 1e-9;
  double support_tol = kDefaultSupportTol;
};

inline std::vector<InvariantResult> verify_game(const Game& game, const VerifyOptions& opts = {}) {
  std::vector<InvariantResult> out;
  std::mt19937_64 rng(opts.seed);

  const PotentialCheck pot = verify_exact_potential(game, opts.samples, opts.seed, opts.potential_tol);
  out.push_back({"exact_potential_identity", pot.holds, pot.max_deviation, opts.potential_tol});

  // central differences of -Phi along coordinate directions, from interior points
  double grad_err = 0.0;
  for (int s = 0; s < opts.samples / 10 + 1; ++s) {
    const PowerProfile p = random_interior_profile(game, rng);
    const Matrix v = marginal_payoffs(game, p);
    for (Index k = 0; k < game.num_users(); ++k)
      for (Index a = 0; a < game.num_nodes(); ++a) {
        Matrix up = p.allocation(), dn = p.allocation();
        up(k, a) += opts.fd_eps;
        dn(k, a) -= opts.fd_eps;
        const double fd = -potential_difference(game, dn, up) / (2.0 * opts.fd_eps);
        grad_err = std::max(grad_err, std::abs(fd - v(k, a)) / std::abs(v(k, a)));
      }
  }
  out.push_back({"gradient_matches_finite_differences", grad_err <= opts.gradient_rel_tol, grad_err,
                 opts.gradient_rel_tol});

  double convexity_excess = -1e300;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int s = 0; s < opts.samples; ++s) {
    const PowerProfile p = random_interior_profile(game, rng);
    const PowerProfile q = random_interior_profile(game, rng);
    const double lam = unit(rng);
    const PowerProfile mid = PowerProfile::unchecked(lam * p.allocation() + (1 - lam) * q.allocation());
    const double excess =
        potential(game, mid) - (lam * potential(game, p) + (1 - lam) * potential(game, q));
    convexity_excess = std::max(convexity_excess, excess);
  }
  out.push_back({"potential_convex_on_segments", convexity_excess <= opts.convexity_slack,
                 convexity_excess, opts.convexity_slack});

  double node_err = 0.0;
  for (int s = 0; s < opts.samples / 10 + 1; ++s) {
    const PowerProfile p = random_interior_profile(game, rng);
    for (Index k = 0; k < game.num_users(); ++k) {
      double sum = 0.0;
      for (Index a = 0; a < game.num_nodes(); ++a) sum += utility_per_node(game, p, k, a);
      const double u = utility(game, p, k);
      node_err = std::max(node_err, std::abs(sum - u) / std::max(std::abs(u), 1e-300));
    }
  }
  out.push_back({"per_node_utilities_sum_to_utility", node_err <= opts.node_sum_rel_tol, node_err,
                 opts.node_sum_rel_tol});
  return out;
}

/// Checks that `q` is an equilibrium and has the structure equilibria must have.
inline std::vector<InvariantResult> verify_equilibrium(const Game& game, const PowerProfile& q,
                                                       const VerifyOptions& opts = {}) {
  std::vector<InvariantResult> out;
  const double res = kkt_residual(game, q);
  out.push_back({"kkt_residual", res <= opts.equilibrium_tol, res, opts.equilibrium_tol});
  const bool forest = is_forest(profile_graph(q, opts.support_tol));
  out.push_back({"equilibrium_graph_is_forest", forest, forest ? 1.0 : 0.0, 1.0});
  const Index dim = equilibrium_face_dim(q, opts.support_tol);
  out.push_back({"face_dim_at_most_A_minus_1", dim <= game.num_nodes() - 1, double(dim),
                 double(game.num_nodes() - 1)});
  const double field = replicator_field(game, q).cwiseAbs().maxCoeff();
  out.push_back({"replicator_field_vanishes", field <= opts.stationary_tol, field,
                 opts.stationary_tol});
  return out;
}

}  // namespace macgame
