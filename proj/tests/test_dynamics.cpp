#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace macgame;
using testing_support::max_abs;

namespace {

Game one_user_two_nodes() {
  Matrix g(1, 2);
  g << 1, 3;
  return new_game(g, Vector::Ones(2), Vector::Ones(2), Vector::Ones(1));
}

}  // namespace

TEST(ReplicatorField, DerivedExample) {
  const Game g = one_user_two_nodes();
  const Matrix f = replicator_field(g, uniform_profile(g));
  // v = (1/1.5, 3/2.5), mean 14/15
  EXPECT_NEAR(f(0, 0), 0.5 * (2.0 / 3.0 - 14.0 / 15.0), 1e-15);
  EXPECT_NEAR(f(0, 1), 0.5 * (1.2 - 14.0 / 15.0), 1e-15);
  EXPECT_NEAR(f(0, 0), -0.13333, 1e-5);
}

TEST(ReplicatorField, VerticesAreStationary) {
  const Game g = random_game(3, 4, 1);
  EXPECT_EQ(max_abs(replicator_field(g, vertex_profile(g, {0, 3, 1}))), 0.0);
}

TEST(ReplicatorField, VanishesAtEquilibrium) {
  const Game g = testing_support::two_by_two();
  const EquilibriumReport r = solve_potential_min(g);
  EXPECT_LE(max_abs(replicator_field(g, r.profile)), 1e-10);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Game h = random_game(3, 3, seed);
    EXPECT_LE(max_abs(replicator_field(h, solve_potential_min(h).profile)), 1e-10);
  }
}

TEST(ReplicatorField, TangentToSimplices) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = testing_support::random_dims(rng, 5, 5);
    const Game g = testing_support::random_general_game(rng, d.users, d.nodes);
    const PowerProfile p = random_interior_profile(g, rng);
    const Matrix f = replicator_field(g, p);
    const double scale = p.allocation().cwiseProduct(marginal_payoffs(g, p)).cwiseAbs().maxCoeff();
    for (Index k = 0; k < g.num_users(); ++k) EXPECT_LE(std::abs(f.row(k).sum()), 1e-14 * scale * g.num_nodes());
  }
}

TEST(ObservedRates, ReconstructMarginalPayoffs) {
  std::mt19937_64 rng(2);
  const Game g = random_game(3, 4, 5);
  const PowerProfile p = random_interior_profile(g, rng);
  Matrix rates(3, 4);
  for (Index k = 0; k < 3; ++k)
    for (Index a = 0; a < 4; ++a) rates(k, a) = utility_per_node(g, p, k, a);
  const Matrix v = marginal_payoffs_from_observations(g, p, rates);
  // b log(1 + g p / N) inverted gives b g / (N + g p) = v
  EXPECT_LE(max_abs(v - marginal_payoffs(g, p)), 1e-12);
  const PowerProfile vertex = vertex_profile(g, {0, 1, 2});
  EXPECT_TRUE(std::isnan(marginal_payoffs_from_observations(g, vertex, rates)(0, 1)));
}

TEST(KlDivergence, Cases) {
  const Game g = random_game(1, 2, 1);
  const PowerProfile q = vertex_profile(g, {0});
  const PowerProfile half = uniform_profile(g);
  const Divergence d = kl_divergence(q, half);
  EXPECT_FALSE(d.infinite);
  EXPECT_NEAR(d.value, std::log(2.0), 1e-15);
  EXPECT_EQ(kl_divergence(half, half).value, 0.0);
  EXPECT_TRUE(kl_divergence(half, q).infinite);
  EXPECT_TRUE(kl_divergence(vertex_profile(g, {1}), q).infinite);
}

TEST(KlDivergence, NonNegativeOnRandomPairs) {
  std::mt19937_64 rng(3);
  const Game g = random_game(3, 3, 2);
  for (int i = 0; i < 200; ++i) {
    const Divergence d = kl_divergence(random_interior_profile(g, rng), random_interior_profile(g, rng));
    EXPECT_GE(d.value, -1e-15);
  }
}

TEST(LyapunovL, ZeroAtTargetAndGrowthEstimate) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = testing_support::random_dims(rng, 4, 4);
    const Game g = random_game(d.users, d.nodes, std::uint64_t(trial) + 1);
    const PowerProfile q = solve_potential_min(g).profile;
    EXPECT_NEAR(lyapunov_L(g, q, q), 0.0, 1e-14);
    const PowerProfile p = random_interior_profile(g, rng);
    EXPECT_GE(lyapunov_L(g, q, p), potential(g, p) - potential(g, q) - 1e-10);
  }
}

TEST(LyapunovL, EntropyRateAlongOrbit) {
  const Game g = random_game(3, 3, 7);
  const PowerProfile q = solve_potential_min(g).profile;
  std::mt19937_64 rng(5);
  IntegrateOptions o;
  o.step = 1e-3;
  o.horizon = 0.2;
  o.reference = q;
  o.residual_tol = 1e-300;
  const Trajectory tr = integrate(g, random_interior_profile(g, rng), o);
  ASSERT_GT(tr.times.size(), 10u);
  const auto& kl = *tr.kl_values;
  for (std::size_t i = 1; i + 1 < tr.times.size(); ++i) {
    const double dh = (kl[i + 1].value - kl[i - 1].value) / (tr.times[i + 1] - tr.times[i - 1]);
    const double L = lyapunov_L(g, q, tr.profiles[i]);
    EXPECT_NEAR(dh, -L, 1e-5 * std::max(1.0, std::abs(L)));
  }
}

TEST(Integrate, InvalidInputs) {
  const Game g = random_game(2, 2, 1);
  IntegrateOptions o;
  o.step = 0.0;
  EXPECT_THROW(integrate(g, uniform_profile(g), o), DomainError);
  EXPECT_THROW(integrate(g, PowerProfile::unchecked(Matrix::Ones(2, 2)), {}), DomainError);
  EXPECT_THROW(integrate(g, PowerProfile::unchecked(Matrix::Ones(3, 2)), {}), ShapeError);
}

TEST(Integrate, DerivedGameFromUniform) {
  const Game g = testing_support::two_by_two();
  IntegrateOptions o;
  o.residual_tol = 1e-6;
  const Trajectory tr = integrate(g, uniform_profile(g), o);
  EXPECT_EQ(tr.terminated_reason, Termination::kConverged);
  EXPECT_LE(tr.final_residual(), 1e-6);
  EXPECT_LE(max_abs(tr.final_profile().allocation() - Matrix::Identity(2, 2)), 1e-5);
}

TEST(Integrate, VertexIsStationary) {
  const Game g = random_game(3, 3, 2);
  IntegrateOptions o;
  o.horizon = 5.0;
  o.face_stopping = false;
  const PowerProfile v = vertex_profile(g, {2, 0, 0});
  const Trajectory tr = integrate(g, v, o);
  for (const PowerProfile& p : tr.profiles) EXPECT_EQ(p.allocation(), v.allocation());
  EXPECT_EQ(tr.terminated_reason, Termination::kHorizon);
  EXPECT_DOUBLE_EQ(tr.times.back(), 5.0);
}

TEST(Integrate, InvariantsAlongRandomOrbits) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 25; ++trial) {
    const auto d = testing_support::random_dims(rng, 5, 5);
    const Game g = random_game(d.users, d.nodes, 300 + std::uint64_t(trial));
    const PowerProfile q = clean_support(g, solve_potential_min(g).profile, kDefaultSupportTol);
    Matrix start = random_interior_profile(g, rng).allocation();
    // a zeroed coordinate must stay zero
    const bool zeroed = g.num_nodes() > 1;
    if (zeroed) {
      start(0, 0) = 0.0;
      start.row(0) *= g.budget(0) / start.row(0).sum();
    }
    IntegrateOptions o;
    o.horizon = 50.0;
    o.reference = q;
    const Trajectory tr = integrate(g, PowerProfile(g, start), o);
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      const Matrix& p = tr.profiles[i].allocation();
      EXPECT_GE(p.minCoeff(), 0.0);
      for (Index k = 0; k < g.num_users(); ++k)
        EXPECT_LE(std::abs(p.row(k).sum() - g.budget(k)), 1e-9 * g.budget(k));
      if (zeroed) EXPECT_EQ(p(0, 0), 0.0);
      if (i > 0) {
        EXPECT_GT(tr.times[i], tr.times[i - 1]);
        EXPECT_LE(tr.potential_values[i], tr.potential_values[i - 1] + 1e-12);
        if (!zeroed) {
          EXPECT_LE((*tr.kl_values)[i].value, (*tr.kl_values)[i - 1].value + 1e-10);
        }
      }
    }
  }
}

TEST(Integrate, StrideAndFinalSample) {
  const Game g = random_game(2, 3, 3);
  std::mt19937_64 rng(7);
  IntegrateOptions o;
  o.horizon = 1.05;
  o.stride = 4;
  o.residual_tol = 1e-300;
  const Trajectory tr = integrate(g, random_interior_profile(g, rng), o);
  EXPECT_EQ(tr.steps, 11);
  EXPECT_EQ(tr.times.size(), 4u);  // t=0, after steps 4 and 8, final
  EXPECT_DOUBLE_EQ(tr.times.back(), 1.05);
  EXPECT_FALSE(tr.kl_values.has_value());
}

TEST(Integrate, ConvergesOnRandomInterior) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Game g = random_game(2, 2, seed);
    std::mt19937_64 rng(seed);
    const Trajectory tr = integrate(g, random_interior_profile(g, rng));
    EXPECT_LE(std::min(tr.final_residual(), tr.final_face_residual()), 1e-5) << seed;
  }
}

TEST(CleanSupport, DropsDustAndRescales) {
  const Game g = random_game(1, 3, 1);
  Matrix m(1, 3);
  m << 0.6, 0.4 - 1e-9, 1e-9;
  const PowerProfile c = clean_support(g, PowerProfile(g, m), 1e-6);
  EXPECT_EQ(c(0, 2), 0.0);
  EXPECT_NEAR(c.allocation().sum(), 1.0, 1e-15);
}

TEST(ReducedGame, FullSupportIsIdentity) {
  const Game g = random_game(3, 4, 9);
  const ReducedGame r = reduced_game(g, Mask::Constant(3, 4, true));
  EXPECT_EQ(r.game.gains(), g.gains());
  EXPECT_FALSE(r.game.restricted());
  EXPECT_EQ(r.node_map, (std::vector<Index>{0, 1, 2, 3}));
  const PowerProfile q = solve_potential_min(r.game).profile;
  EXPECT_EQ(r.embed(g, q).allocation(), q.allocation());
}

TEST(ReducedGame, SingleUserSingleNode) {
  const Game g = random_game(1, 3, 9);
  Mask s(1, 3);
  s << false, true, false;
  const ReducedGame r = reduced_game(g, s);
  EXPECT_EQ(r.game.num_nodes(), 1);
  const PowerProfile full = r.embed(g, solve_potential_min(r.game).profile);
  EXPECT_EQ(full.allocation(), (Matrix(1, 3) << 0, 1, 0).finished());
}

TEST(ReducedGame, EmptySubsetRejected) {
  const Game g = random_game(2, 2, 1);
  Mask s(2, 2);
  s << true, true, false, false;
  EXPECT_THROW(reduced_game(g, s), DomainError);
}

TEST(ReducedGame, RestrictedOrbitReachesReducedEquilibrium) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Game g = random_game(3, 4, seed);
    Mask s = Mask::Constant(3, 4, true);
    s(0, 0) = s(1, 1) = s(2, 2) = s(2, 3) = false;
    const ReducedGame r = reduced_game(g, s);
    const PowerProfile target = r.embed(g, solve_potential_min(r.game).profile);
    const PowerProfile start = r.embed(g, uniform_profile(r.game));
    IntegrateOptions o;
    o.residual_tol = 1e-10;
    o.horizon = 2e4;
    const Trajectory tr = integrate(g, start, o);
    EXPECT_EQ(tr.terminated_reason, Termination::kConverged);
    EXPECT_LE(max_abs(tr.final_profile().allocation() - target.allocation()), 1e-3) << seed;
    EXPECT_LE(max_abs(r.restrict_profile(tr.final_profile()).allocation() -
                      r.restrict_profile(target).allocation()),
              1e-3);
  }
}
