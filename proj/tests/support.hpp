#pragma once

// Independent oracles and random generators for the test suites. The oracles
// recompute model quantities from their definitions with plain loops and never
// call into the library's payoff code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "macgame/macgame.hpp"

namespace testing_support {

using macgame::Game;
using macgame::Index;
using macgame::Matrix;
using macgame::PowerProfile;
using macgame::Vector;

inline double oracle_utility(const Game& g, const Matrix& p, Index k) {
  double u = 0.0;
  for (Index a = 0; a < g.num_nodes(); ++a) {
    double interference = g.noise()(a);
    for (Index l = 0; l < g.num_users(); ++l)
      if (l != k) interference += g.gain(l, a) * p(l, a);
    u += g.bandwidths()(a) * std::log(1.0 + g.gain(k, a) * p(k, a) / interference);
  }
  return u;
}

inline double oracle_potential(const Game& g, const Matrix& p) {
  double phi = 0.0;
  for (Index a = 0; a < g.num_nodes(); ++a) {
    double load = g.noise()(a);
    for (Index k = 0; k < g.num_users(); ++k) load += g.gain(k, a) * p(k, a);
    phi -= g.bandwidths()(a) * std::log(load);
  }
  return phi;
}

/// Closed-form water-filling for one user facing fixed effective noise levels:
/// active nodes sorted by floor level, water level from the budget equation.
inline Vector oracle_waterfill(const Vector& b, const Vector& floor_level, double budget) {
  const Index A = b.size();
  std::vector<Index> order(static_cast<std::size_t>(A));
  for (Index a = 0; a < A; ++a) order[std::size_t(a)] = a;
  std::sort(order.begin(), order.end(), [&](Index x, Index y) {
    return floor_level(x) / b(x) < floor_level(y) / b(y);
  });
  double w = 0.0;
  for (Index m = A; m >= 1; --m) {
    double sb = 0.0, sn = 0.0;
    for (Index i = 0; i < m; ++i) {
      sb += b(order[std::size_t(i)]);
      sn += floor_level(order[std::size_t(i)]);
    }
    w = (budget + sn) / sb;
    const Index last = order[std::size_t(m - 1)];
    if (w * b(last) - floor_level(last) > 0.0) break;
  }
  Vector p(A);
  for (Index a = 0; a < A; ++a) p(a) = std::max(0.0, w * b(a) - floor_level(a));
  return p;
}

struct Dims {
  Index users;
  Index nodes;
};

inline Dims random_dims(std::mt19937_64& rng, Index max_users, Index max_nodes, Index min_users = 1,
                        Index min_nodes = 1) {
  std::uniform_int_distribution<Index> k(min_users, max_users), a(min_nodes, max_nodes);
  const Index users = k(rng);
  return {users, a(rng)};
}

/// A random game whose noise, bandwidths and budgets are also drawn, to leave the defaults.
inline Game random_general_game(std::mt19937_64& rng, Index K, Index A) {
  std::uniform_real_distribution<double> u(0.2, 3.0);
  std::exponential_distribution<double> e(1.0);
  Matrix g(K, A);
  for (Index i = 0; i < K; ++i)
    for (Index j = 0; j < A; ++j) g(i, j) = e(rng) + 1e-3;
  Vector noise(A), bw(A), budgets(K);
  for (Index j = 0; j < A; ++j) {
    noise(j) = u(rng);
    bw(j) = u(rng);
  }
  for (Index i = 0; i < K; ++i) budgets(i) = u(rng);
  return macgame::new_game(g, noise, bw, budgets);
}

/// The game with gains [[2,1],[1,2]] and unit noise, bandwidths and budgets.
inline Game two_by_two() {
  Matrix g(2, 2);
  g << 2, 1, 1, 2;
  return macgame::new_game(g, Vector::Ones(2), Vector::Ones(2), Vector::Ones(2));
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace testing_support
