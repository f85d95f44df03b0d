// Integrates the replicator flow from a random interior point of a 3x3 game
// and prints a few samples of the orbit.
#include <iostream>
#include <random>

#include "macgame/macgame.hpp"

int main() {
  using namespace macgame;
  const Game game = random_game(3, 3, 11);
  std::mt19937_64 rng(5);
  const PowerProfile start = random_interior_profile(game, rng);
  const PowerProfile q = solve_potential_min(game).profile;

  IntegrateOptions opts;
  opts.horizon = 200;
  opts.stride = 100;
  opts.reference = clean_support(game, q, kDefaultSupportTol);
  const Trajectory tr = integrate(game, start, opts);

  for (std::size_t i = 0; i < tr.times.size(); ++i)
    std::cout << "t=" << tr.times[i] << " potential=" << tr.potential_values[i]
              << " kl=" << (*tr.kl_values)[i].value << " residual=" << tr.kkt_residuals[i] << "\n";
  std::cout << "stopped: " << to_string(tr.terminated_reason) << "\nfinal:\n"
            << tr.final_profile().allocation() << "\nsolver:\n" << q.allocation() << "\n";
}
