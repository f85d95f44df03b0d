#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "macgame/equilibrium.hpp"
#include "macgame/game.hpp"
#include "macgame/payoff.hpp"

namespace macgame {

/// dp(k, a)/dt = p(k, a) (v(k, a) - v_k), with v_k the P_k-weighted user average.
inline Matrix replicator_field(const Game& game, const Matrix& p) {
  const Matrix v = marginal_payoffs(game, p);
  Matrix f(p.rows(), p.cols());
  for (Index k = 0; k < p.rows(); ++k) {
    const double mean = p.row(k).dot(v.row(k)) / game.budget(k);
    f.row(k) = p.row(k).cwiseProduct((v.row(k).array() - mean).matrix());
  }
  return f;
}

inline Matrix replicator_field(const Game& game, const PowerProfile& profile) {
  return replicator_field(game, profile.allocation());
}

/**
 * Marginal payoffs rebuilt from what user k observes at each node: its own
 * power and the spectral efficiency u(k, a). Inverting the rate formula gives
 * v(k, a) = b_a (1 - exp(-u(k, a) / b_a)) / p(k, a). Entries with p(k, a) = 0
 * carry no observation and are NaN.
 */
inline Matrix marginal_payoffs_from_observations(const Game& game, const PowerProfile& profile,
                                                 const Matrix& observed_rates) {
  const Matrix& p = profile.allocation();
  Matrix v(p.rows(), p.cols());
  for (Index k = 0; k < p.rows(); ++k)
    for (Index a = 0; a < p.cols(); ++a) {
      const double b = game.bandwidths()(a);
      v(k, a) = p(k, a) > 0.0 ? -b * std::expm1(-observed_rates(k, a) / b) / p(k, a)
                              : std::numeric_limits<double>::quiet_NaN();
    }
  return v;
}

/// Relative entropy value; `infinite` marks a target not absolutely continuous w.r.t. p.
struct Divergence {
  double value = 0.0;
  bool infinite = false;
  static Divergence infinity() { return {0.0, true}; }
};

/// H_q(p) = sum over q(k, a) > 0 of q(k, a) log(q(k, a) / p(k, a)).
inline Divergence kl_divergence(const PowerProfile& q, const PowerProfile& p) {
  if (q.num_users() != p.num_users() || q.num_nodes() != p.num_nodes())
    throw ShapeError("kl_divergence: profiles differ in shape");
  double h = 0.0;
  for (Index k = 0; k < q.num_users(); ++k)
    for (Index a = 0; a < q.num_nodes(); ++a) {
      const double qa = q(k, a);
      if (qa <= 0.0) continue;
      if (p(k, a) <= 0.0) return Divergence::infinity();
      h += qa * std::log(qa / p(k, a));
    }
  return {h, false};
}

/// L_q(p) = -sum (p - q) v(p); along replicator orbits dH_q/dt = -L_q.
inline double lyapunov_L(const Game& game, const PowerProfile& q, const PowerProfile& p) {
  const Matrix v = marginal_payoffs(game, p);
  return -(p.allocation() - q.allocation()).cwiseProduct(v).sum();
}

/// Zeros entries at or below support_tol * P_k and rescales each row back to its budget.
inline PowerProfile clean_support(const Game& game, const PowerProfile& q, double support_tol) {
  Matrix m = q.allocation();
  for (Index k = 0; k < m.rows(); ++k) {
    for (Index a = 0; a < m.cols(); ++a)
      if (m(k, a) <= support_tol * game.budget(k)) m(k, a) = 0.0;
    m.row(k) *= game.budget(k) / m.row(k).sum();
  }
  return PowerProfile(game, std::move(m));
}

/// Nodes with strictly positive power.
inline Mask positive_support(const PowerProfile& p) {
  return (p.allocation().array() > 0.0).matrix();
}

enum class Termination { kConverged, kHorizon, kStepFloor };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kConverged: return "converged";
    case Termination::kHorizon: return "horizon";
    case Termination::kStepFloor: return "step_floor";
  }
  return "unknown";
}

struct Trajectory {
  std::vector<double> times;
  std::vector<PowerProfile> profiles;
  std::vector<double> potential_values;
  std::optional<std::vector<Divergence>> kl_values;
  std::vector<double> kkt_residuals;   // against the full game
  std::vector<double> face_residuals;  // against the face spanned by the initial support
  std::vector<double> clamped_mass;  // clamped since the previous stored sample
  double step_size = 0.0;            // step in force at termination
  Termination terminated_reason = Termination::kHorizon;
  long steps = 0;
  long rejected_steps = 0;
  int underflow_events = 0;  // coordinates positive at the start that reached exactly 0
  double total_clamped = 0.0;

  const PowerProfile& final_profile() const { return profiles.back(); }
  double final_residual() const { return kkt_residuals.back(); }
  double final_face_residual() const { return face_residuals.back(); }
};

struct IntegrateOptions {
  double step = 0.1;
  double horizon = 1000.0;
  double residual_tol = 1e-5;
  int stride = 1;                        // store every stride-th accepted step
  double min_step = 1e-12;               // halving below this ends the run
  double clamp_tol = 1e-8;               // per-user clamped mass, relative to P_k
  bool face_stopping = true;             // stop on the face residual rather than the full one
  std::optional<PowerProfile> reference; // KL target
};

namespace detail {

inline Matrix rk4_step(const Game& game, const Matrix& p, double h) {
  const Matrix k1 = replicator_field(game, p);
  const Matrix k2 = replicator_field(game, p + 0.5 * h * k1);
  const Matrix k3 = replicator_field(game, p + 0.5 * h * k2);
  const Matrix k4 = replicator_field(game, p + h * k3);
  return p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

/**
 * Fixed-step RK4 integration of the replicator dynamics.
 *
 * After every step negative coordinates are clamped to zero and each row is
 * rescaled to its budget. A step is rejected and the step size halved when it
 * raises the potential or clamps more than clamp_tol * P_k of some user's
 * power. Integration stops once the KKT residual reaches residual_tol, at the
 * horizon, or when the step size falls below min_step.
 *
 * Coordinates that start at zero stay at zero, so the orbit can only reach
 * the equilibrium of the face spanned by the initial support. By default the
 * stopping test uses the residual of that face's game; for interior starts it
 * is the full residual.
 */
inline Trajectory integrate(const Game& game, const PowerProfile& init,
                            const IntegrateOptions& opts = {}) {
  if (init.num_users() != game.num_users() || init.num_nodes() != game.num_nodes())
    throw ShapeError("integrate: initial profile does not match the game");
  PowerProfile start(game, init.allocation());  // rejects invalid inits
  if (!(opts.step > 0.0)) throw DomainError("integrate: step must be positive");
  if (!(opts.horizon > 0.0)) throw DomainError("integrate: horizon must be positive");
  if (opts.stride < 1) throw DomainError("integrate: stride must be at least 1");

  Trajectory tr;
  if (opts.reference) tr.kl_values.emplace();
  Matrix p = start.allocation();
  double t = 0.0;
  double h = opts.step;
  double clamped_since_store = 0.0;
  const Mask initial_support = (positive_support(start).array() && game.access().array()).matrix();
  const Game face(game.gains(), game.noise(), game.bandwidths(), game.budgets(), initial_support);
  double residual = kkt_breakdown(game, p).residual;
  double face_residual = kkt_breakdown(face, p).residual;

  auto store = [&]() {
    PowerProfile prof = PowerProfile::unchecked(p);
    tr.times.push_back(t);
    tr.potential_values.push_back(potential(game, prof));
    tr.kkt_residuals.push_back(residual);
    tr.face_residuals.push_back(face_residual);
    tr.clamped_mass.push_back(clamped_since_store);
    if (tr.kl_values) tr.kl_values->push_back(kl_divergence(*opts.reference, prof));
    tr.profiles.push_back(std::move(prof));
    clamped_since_store = 0.0;
  };
  store();

  long since_store = 0;
  while (true) {
    if ((opts.face_stopping ? face_residual : residual) <= opts.residual_tol) {
      tr.terminated_reason = Termination::kConverged;
      break;
    }
    if (t >= opts.horizon) {
      tr.terminated_reason = Termination::kHorizon;
      break;
    }
    const double dt = std::min(h, opts.horizon - t);
    Matrix cand = detail::rk4_step(game, p, dt);

    bool reject = false;
    double clamped = 0.0;
    for (Index k = 0; k < cand.rows() && !reject; ++k) {
      double row_clamped = 0.0;
      for (Index a = 0; a < cand.cols(); ++a)
        if (cand(k, a) < 0.0) {
          row_clamped -= cand(k, a);
          cand(k, a) = 0.0;
        }
      if (row_clamped > opts.clamp_tol * game.budget(k)) reject = true;
      cand.row(k) *= game.budget(k) / cand.row(k).sum();
      clamped += row_clamped;
    }
    if (!reject) {
      const Matrix v = marginal_payoffs(game, p);
      Vector mean(p.rows());
      for (Index k = 0; k < p.rows(); ++k) mean(k) = p.row(k).dot(v.row(k)) / game.budget(k);
      reject = merit_difference(game, p, cand, mean) > 0.0;
    }
    if (reject) {
      ++tr.rejected_steps;
      h *= 0.5;
      if (h < opts.min_step) {
        tr.terminated_reason = Termination::kStepFloor;
        break;
      }
      continue;
    }

    for (Index k = 0; k < p.rows(); ++k)
      for (Index a = 0; a < p.cols(); ++a)
        if (p(k, a) > 0.0 && cand(k, a) == 0.0) ++tr.underflow_events;
    p = std::move(cand);
    t += dt;
    ++tr.steps;
    tr.total_clamped += clamped;
    clamped_since_store += clamped;
    residual = kkt_breakdown(game, p).residual;
    face_residual = kkt_breakdown(face, p).residual;
    if (++since_store == opts.stride) {
      store();
      since_store = 0;
    }
  }
  if (tr.times.back() != t) store();
  tr.step_size = h;
  return tr;
}

/// Replaces the trajectory's KL monitor with divergences from `q`.
inline void recompute_kl(Trajectory& tr, const PowerProfile& q) {
  tr.kl_values.emplace();
  for (const PowerProfile& p : tr.profiles) tr.kl_values->push_back(kl_divergence(q, p));
}

/**
 * A game restricted to per-user node subsets. The restricted game keeps only
 * nodes used by at least one user and records its node-index map; user k may
 * access exactly its own subset.
 */
struct ReducedGame {
  Game game;
  std::vector<Index> node_map;  // reduced node -> original node
  Index original_nodes = 0;

  /// Embeds a reduced-game profile into the original space, zeros elsewhere.
  PowerProfile embed(const Game& original, const PowerProfile& reduced) const {
    Matrix m = Matrix::Zero(original.num_users(), original_nodes);
    for (std::size_t j = 0; j < node_map.size(); ++j) m.col(node_map[j]) = reduced.allocation().col(Index(j));
    return PowerProfile(original, std::move(m));
  }

  /// Restricts an original profile that lives on the subsets.
  PowerProfile restrict_profile(const PowerProfile& full) const {
    Matrix m(full.num_users(), Index(node_map.size()));
    for (std::size_t j = 0; j < node_map.size(); ++j) m.col(Index(j)) = full.allocation().col(node_map[j]);
    return PowerProfile(game, std::move(m));
  }
};

inline ReducedGame reduced_game(const Game& game, const Mask& supports) {
  if (supports.rows() != game.num_users() || supports.cols() != game.num_nodes())
    throw ShapeError("reduced_game: supports must be K x A");
  for (Index k = 0; k < game.num_users(); ++k) {
    if (!supports.row(k).any())
      throw DomainError("reduced_game: user " + std::to_string(k) + " has an empty node subset");
    for (Index a = 0; a < game.num_nodes(); ++a)
      if (supports(k, a) && !game.allowed(k, a))
        throw DomainError("reduced_game: user " + std::to_string(k) + " cannot access node " +
                          std::to_string(a));
  }
  std::vector<Index> nodes;
  for (Index a = 0; a < game.num_nodes(); ++a)
    if (supports.col(a).any()) nodes.push_back(a);
  const Index n = Index(nodes.size());
  Matrix gains(game.num_users(), n);
  Vector noise(n), bw(n);
  Mask access(game.num_users(), n);
  for (Index j = 0; j < n; ++j) {
    const Index a = nodes[std::size_t(j)];
    gains.col(j) = game.gains().col(a);
    noise(j) = game.noise()(a);
    bw(j) = game.bandwidths()(a);
    access.col(j) = supports.col(a);
  }
  std::optional<Mask> mask;
  if (!access.all()) mask = std::move(access);
  return ReducedGame{Game(std::move(gains), std::move(noise), std::move(bw), game.budgets(),
                          std::move(mask), game.provenance()),
                     std::move(nodes), game.num_nodes()};
}

}  // namespace macgame
