#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "macgame/game.hpp"

namespace macgame {

/**
 * Euclidean projection of `y` onto {x >= 0, sum(x) = budget}.
 *
 * Sort-and-threshold: with u the entries sorted in decreasing order, the
 * threshold is theta = (sum_{j<=r} u_j - budget) / r for the largest r with
 * u_r > theta, and x = max(y - theta, 0).
 */
inline Vector simplex_project(const Vector& y, double budget) {
  if (!(budget > 0.0)) throw DomainError("simplex_project: budget must be positive");
  const Index n = y.size();
  if (n == 0) throw ShapeError("simplex_project: empty vector");
  std::vector<double> u(y.data(), y.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Index j = 0; j < n; ++j) {
    cumsum += u[std::size_t(j)];
    const double t = (cumsum - budget) / double(j + 1);
    if (u[std::size_t(j)] > t) theta = t;
  }
  Vector x = (y.array() - theta).max(0.0).matrix();
  // rounding of the threshold leaves a few ulps of budget error
  Index imax = 0;
  x.maxCoeff(&imax);
  x(imax) += budget - x.sum();
  if (x(imax) < 0.0) x(imax) = 0.0;
  return x;
}

/// Projection restricted to the entries with `allowed` set; the others are zero.
inline Vector simplex_project(const Vector& y, double budget,
                              const Eigen::Matrix<bool, 1, Eigen::Dynamic>& allowed) {
  if (allowed.all()) return simplex_project(y, budget);
  std::vector<Index> idx;
  for (Index a = 0; a < y.size(); ++a)
    if (allowed(a)) idx.push_back(a);
  Vector sub(Index(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) sub(Index(i)) = y(idx[i]);
  const Vector proj = simplex_project(sub, budget);
  Vector x = Vector::Zero(y.size());
  for (std::size_t i = 0; i < idx.size(); ++i) x(idx[i]) = proj(Index(i));
  return x;
}

}  // namespace macgame
