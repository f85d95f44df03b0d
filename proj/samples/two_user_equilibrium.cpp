// Two users, two nodes, each user stronger on its own node: at equilibrium
// each user keeps to its strong node.
#include <cmath>
#include <iostream>

#include "macgame/macgame.hpp"

int main() {
  using namespace macgame;
  Matrix g(2, 2);
  g << 2, 1, 1, 2;
  const Game game = new_game(g, Vector::Ones(2), Vector::Ones(2), Vector::Ones(2));

  const EquilibriumReport eq = solve_potential_min(game);
  std::cout << "equilibrium:\n" << eq.profile.allocation() << "\n"
            << "potential " << eq.potential_value << " (-2 log 3 = " << -2 * std::log(3.0) << ")\n"
            << "kkt residual " << eq.kkt_residual << ", forest " << eq.forest << "\n";

  const ConditionReport c = check_conditions(game);
  std::cout << "rho(S_max) " << c.rho_smax << ", degeneracy index " << c.degeneracy_index << "\n";
}
