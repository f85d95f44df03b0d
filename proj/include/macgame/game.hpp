#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "macgame/errors.hpp"

namespace macgame {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Law of the random channel gains.
enum class GainDistribution {
  kExponential,  // unit mean, |h|^2 for circular complex Gaussian h
  kLogUniform,   // log-uniform on [0.1, 10]
};

inline std::string_view to_string(GainDistribution d) {
  switch (d) {
    case GainDistribution::kExponential: return "exponential";
    case GainDistribution::kLogUniform: return "log-uniform";
  }
  return "unknown";
}

inline GainDistribution parse_gain_distribution(std::string_view name) {
  if (name == "exponential") return GainDistribution::kExponential;
  if (name == "log-uniform" || name == "loguniform") return GainDistribution::kLogUniform;
  throw DomainError("unknown gain distribution '" + std::string(name) + "'");
}

/// Where a game came from; carried through serialization only.
struct Provenance {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> gain_distribution;
};

/**
 * A parallel multiple-access-channel power allocation game.
 *
 * K users split their power budgets over A orthogonal receiver nodes. The
 * instance is immutable after construction and safe to share across threads.
 *
 * The optional access mask restricts user k to the nodes with access(k, a)
 * set; it is how reduced games are represented. The default grants every
 * user every node.
 */
class Game {
 public:
  Game(Matrix gains, Vector noise, Vector bandwidths, Vector budgets,
       std::optional<Mask> access = std::nullopt, Provenance provenance = {})
      : gains_(std::move(gains)),
        noise_(std::move(noise)),
        bandwidths_(std::move(bandwidths)),
        budgets_(std::move(budgets)),
        provenance_(std::move(provenance)) {
    const Index k = gains_.rows();
    const Index a = gains_.cols();
    if (k < 1 || a < 1) throw ShapeError("gains must be a non-empty K x A matrix");
    if (noise_.size() != a)
      throw ShapeError("noise has length " + std::to_string(noise_.size()) + ", expected " +
                       std::to_string(a));
    if (bandwidths_.size() != a)
      throw ShapeError("bandwidths has length " + std::to_string(bandwidths_.size()) +
                       ", expected " + std::to_string(a));
    if (budgets_.size() != k)
      throw ShapeError("budgets has length " + std::to_string(budgets_.size()) + ", expected " +
                       std::to_string(k));
    for (Index i = 0; i < k; ++i)
      for (Index j = 0; j < a; ++j) require_positive("gains", gains_(i, j), i, j);
    for (Index j = 0; j < a; ++j) {
      require_positive("noise", noise_(j), j);
      require_positive("bandwidths", bandwidths_(j), j);
    }
    for (Index i = 0; i < k; ++i) require_positive("budgets", budgets_(i), i);

    if (access) {
      if (access->rows() != k || access->cols() != a)
        throw ShapeError("access mask must be K x A");
      access_ = std::move(*access);
      for (Index i = 0; i < k; ++i)
        if (!access_.row(i).any())
          throw DomainError("access mask leaves user " + std::to_string(i) + " without nodes");
    } else {
      access_ = Mask::Constant(k, a, true);
    }
  }

  Index num_users() const { return gains_.rows(); }
  Index num_nodes() const { return gains_.cols(); }

  const Matrix& gains() const { return gains_; }
  const Vector& noise() const { return noise_; }
  const Vector& bandwidths() const { return bandwidths_; }
  const Vector& budgets() const { return budgets_; }
  const Mask& access() const { return access_; }
  const Provenance& provenance() const { return provenance_; }

  double gain(Index k, Index a) const { return gains_(k, a); }
  double budget(Index k) const { return budgets_(k); }
  bool allowed(Index k, Index a) const { return access_(k, a); }
  bool restricted() const { return !access_.all(); }

  /// True when the bandwidths sum to one, i.e. were given in normalized form.
  bool bandwidths_normalized() const { return std::abs(bandwidths_.sum() - 1.0) <= 1e-12; }

  Game with_provenance(Provenance p) const {
    Game g = *this;
    g.provenance_ = std::move(p);
    return g;
  }

 private:
  static void require_positive(const char* field, double v, Index i, Index j = -1) {
    if (std::isfinite(v) && v > 0.0) return;
    std::ostringstream msg;
    msg << field << "[" << i;
    if (j >= 0) msg << "][" << j;
    msg << "] = " << v << " must be finite and strictly positive";
    throw DomainError(msg.str());
  }

  Matrix gains_;
  Vector noise_;
  Vector bandwidths_;
  Vector budgets_;
  Mask access_;
  Provenance provenance_;
};

inline Game new_game(Matrix gains, Vector noise, Vector bandwidths, Vector budgets) {
  return Game(std::move(gains), std::move(noise), std::move(bandwidths), std::move(budgets));
}

/// Rescales raw bandwidths B_a to b_a = B_a / sum(B).
inline Vector normalize_bandwidths(const Vector& raw) {
  if (raw.size() == 0) throw ShapeError("empty bandwidth vector");
  for (Index j = 0; j < raw.size(); ++j)
    if (!(raw(j) > 0.0) || !std::isfinite(raw(j)))
      throw DomainError("bandwidths[" + std::to_string(j) + "] must be finite and positive");
  return raw / raw.sum();
}

struct RandomGameOptions {
  GainDistribution distribution = GainDistribution::kExponential;
  std::optional<Vector> noise;       // default all ones
  std::optional<Vector> bandwidths;  // default 1/A each
  std::optional<Vector> budgets;     // default all ones
};

inline double draw_gain(std::mt19937_64& rng, GainDistribution d) {
  switch (d) {
    case GainDistribution::kExponential: {
      std::exponential_distribution<double> law(1.0);
      double g = 0.0;
      while (!(g > 0.0)) g = law(rng);
      return g;
    }
    case GainDistribution::kLogUniform: {
      std::uniform_real_distribution<double> law(std::log(0.1), std::log(10.0));
      return std::exp(law(rng));
    }
  }
  return 1.0;
}

/// Game with i.i.d. gains from a continuous law; deterministic in `seed`.
inline Game random_game(Index num_users, Index num_nodes, std::uint64_t seed,
                        const RandomGameOptions& opts = {}) {
  if (num_users < 1) throw DomainError("random_game: number of users must be at least 1");
  if (num_nodes < 1) throw DomainError("random_game: number of nodes must be at least 1");
  std::mt19937_64 rng(seed);
  Matrix gains(num_users, num_nodes);
  for (Index k = 0; k < num_users; ++k)
    for (Index a = 0; a < num_nodes; ++a) gains(k, a) = draw_gain(rng, opts.distribution);
  Vector noise = opts.noise.value_or(Vector::Ones(num_nodes));
  Vector bw = opts.bandwidths.value_or(Vector::Constant(num_nodes, 1.0 / double(num_nodes)));
  Vector budgets = opts.budgets.value_or(Vector::Ones(num_users));
  return Game(std::move(gains), std::move(noise), std::move(bw), std::move(budgets), std::nullopt,
              Provenance{seed, std::string(to_string(opts.distribution))});
}

/// Degenerate test game: user k's gains are factors[k] times a common random row.
inline Game collinear_game(Index num_nodes, const std::vector<double>& factors, std::uint64_t seed,
                           GainDistribution dist = GainDistribution::kExponential) {
  if (factors.empty()) throw DomainError("collinear_game: need at least one factor");
  std::mt19937_64 rng(seed);
  Vector base(num_nodes);
  for (Index a = 0; a < num_nodes; ++a) base(a) = draw_gain(rng, dist);
  Matrix gains(Index(factors.size()), num_nodes);
  for (Index k = 0; k < gains.rows(); ++k) gains.row(k) = factors[std::size_t(k)] * base.transpose();
  return Game(std::move(gains), Vector::Ones(num_nodes),
              Vector::Constant(num_nodes, 1.0 / double(num_nodes)), Vector::Ones(gains.rows()),
              std::nullopt, Provenance{seed, std::string(to_string(dist)) + "+collinear"});
}

/**
 * A point of the product of scaled simplices: p(k, a) >= 0 and each row sums
 * to the user's budget (within 1e-9 relative). Rows never assign power to a
 * node the user cannot access.
 */
class PowerProfile {
 public:
  static constexpr double kBudgetTolerance = 1e-9;

  PowerProfile(const Game& game, Matrix allocation) : alloc_(std::move(allocation)) {
    if (alloc_.rows() != game.num_users() || alloc_.cols() != game.num_nodes())
      throw ShapeError("profile must be " + std::to_string(game.num_users()) + " x " +
                       std::to_string(game.num_nodes()));
    for (Index k = 0; k < alloc_.rows(); ++k) {
      for (Index a = 0; a < alloc_.cols(); ++a) {
        const double p = alloc_(k, a);
        if (!std::isfinite(p) || p < 0.0)
          throw DomainError("profile[" + std::to_string(k) + "][" + std::to_string(a) +
                            "] must be finite and non-negative");
        if (p > 0.0 && !game.allowed(k, a))
          throw DomainError("profile assigns power to inaccessible node " + std::to_string(a) +
                            " for user " + std::to_string(k));
      }
      const double budget = game.budget(k);
      const double total = alloc_.row(k).sum();
      if (std::abs(total - budget) > kBudgetTolerance * budget) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "user " << k << " allocates " << total << " but the budget is " << budget;
        throw DomainError(msg.str());
      }
    }
  }

  /// Skips validation; for harnesses that need e.g. zero budgets.
  static PowerProfile unchecked(Matrix allocation) {
    PowerProfile p;
    p.alloc_ = std::move(allocation);
    return p;
  }

  const Matrix& allocation() const { return alloc_; }
  double operator()(Index k, Index a) const { return alloc_(k, a); }
  Index num_users() const { return alloc_.rows(); }
  Index num_nodes() const { return alloc_.cols(); }

 private:
  PowerProfile() = default;
  Matrix alloc_;
};

/// Each user splits evenly over the nodes it can access.
inline PowerProfile uniform_profile(const Game& game) {
  Matrix p = Matrix::Zero(game.num_users(), game.num_nodes());
  for (Index k = 0; k < game.num_users(); ++k) {
    const double n = double(game.access().row(k).count());
    for (Index a = 0; a < game.num_nodes(); ++a)
      if (game.allowed(k, a)) p(k, a) = game.budget(k) / n;
  }
  return PowerProfile(game, std::move(p));
}

/// User k puts its whole budget on node nodes[k].
inline PowerProfile vertex_profile(const Game& game, const std::vector<Index>& nodes) {
  if (Index(nodes.size()) != game.num_users())
    throw ShapeError("vertex assignment needs one node per user");
  Matrix p = Matrix::Zero(game.num_users(), game.num_nodes());
  for (Index k = 0; k < game.num_users(); ++k) {
    const Index a = nodes[std::size_t(k)];
    if (a < 0 || a >= game.num_nodes())
      throw DomainError("vertex assignment node index " + std::to_string(a) + " out of range");
    p(k, a) = game.budget(k);
  }
  return PowerProfile(game, std::move(p));
}

/// Uniform draw from the interior of each user's accessible simplex.
inline PowerProfile random_interior_profile(const Game& game, std::mt19937_64& rng) {
  std::exponential_distribution<double> law(1.0);
  Matrix p = Matrix::Zero(game.num_users(), game.num_nodes());
  for (Index k = 0; k < game.num_users(); ++k) {
    double total = 0.0;
    for (Index a = 0; a < game.num_nodes(); ++a) {
      if (!game.allowed(k, a)) continue;
      double e = 0.0;
      while (!(e > 1e-12)) e = law(rng);
      p(k, a) = e;
      total += e;
    }
    p.row(k) *= game.budget(k) / total;
    // absorb rounding in the largest entry so the row sum is exact to the ulp
    Index amax = 0;
    p.row(k).maxCoeff(&amax);
    p(k, amax) += game.budget(k) - p.row(k).sum();
  }
  return PowerProfile(game, std::move(p));
}

}  // namespace macgame
