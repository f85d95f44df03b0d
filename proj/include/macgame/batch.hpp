#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "macgame/equilibrium.hpp"
#include "macgame/game.hpp"
#include "macgame/io.hpp"
#include "macgame/structure.hpp"

namespace macgame {

struct BatchOptions {
  int count = 200;
  Index max_users = 4;
  Index max_nodes = 4;
  std::uint64_t seed = 1;
  int starts = 10;  // random solver inits per instance
  GainDistribution distribution = GainDistribution::kExponential;
  SolverOptions solver;
  double agreement_tol = 1e-6;
};

/// Per-instance outcome of a batch run.
struct BatchRow {
  std::uint64_t seed = 0;
  Index num_users = 0;
  Index num_nodes = 0;
  ConditionReport conditions;
  std::string game_hash;
  bool all_converged = true;
  double max_residual = 0.0;
  double multistart_spread = 0.0;  // largest pairwise max-norm distance
  bool multistart_agree = true;
  bool forest = true;    // over every start
  Index max_face_dim = 0;
  double potential_value = 0.0;
};

/// Dimensions of instance `seed`: K in [1, max_users], A in [1, max_nodes].
inline std::pair<Index, Index> batch_dimensions(std::uint64_t seed, Index max_users,
                                                Index max_nodes) {
  std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ULL);
  std::uniform_int_distribution<Index> users(1, max_users), nodes(1, max_nodes);
  const Index K = users(rng);
  return {K, nodes(rng)};
}

inline BatchRow run_instance(std::uint64_t seed, const BatchOptions& opts) {
  const auto [K, A] = batch_dimensions(seed, opts.max_users, opts.max_nodes);
  RandomGameOptions gopts;
  gopts.distribution = opts.distribution;
  const Game game = random_game(K, A, seed, gopts);
  BatchRow row;
  row.seed = seed;
  row.num_users = K;
  row.num_nodes = A;
  row.game_hash = io::game_hash(game);
  row.conditions = check_conditions(game);

  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 17);
  std::vector<Matrix> solutions;
  for (int s = 0; s < opts.starts; ++s) {
    const PowerProfile init = random_interior_profile(game, rng);
    const EquilibriumReport rep = solve_potential_min(game, init, opts.solver);
    row.all_converged = row.all_converged && rep.converged;
    row.max_residual = std::max(row.max_residual, rep.kkt_residual);
    row.forest = row.forest && rep.forest;
    row.max_face_dim = std::max(row.max_face_dim, rep.face_dim);
    if (s == 0) row.potential_value = rep.potential_value;
    for (const Matrix& other : solutions)
      row.multistart_spread =
          std::max(row.multistart_spread, (other - rep.profile.allocation()).cwiseAbs().maxCoeff());
    solutions.push_back(rep.profile.allocation());
  }
  row.multistart_agree = row.multistart_spread <= opts.agreement_tol;
  return row;
}

/// Worker count: MACGAME_THREADS if set and positive, else the hardware concurrency.
inline unsigned batch_threads() {
  if (const char* env = std::getenv("MACGAME_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return unsigned(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Instances seed, seed + 1, ...; rows come back in seed order regardless of threading.
inline std::vector<BatchRow> run_batch(const BatchOptions& opts, unsigned threads = batch_threads()) {
  std::vector<BatchRow> rows(std::size_t(std::max(0, opts.count)));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < rows.size(); i = next++)
      rows[i] = run_instance(opts.seed + i, opts);
  };
  threads = std::max(1u, std::min<unsigned>(threads, unsigned(rows.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  return rows;
}

inline constexpr const char* kBatchSummaryHeader =
    "seed,K,A,rho_smax,min_rho_s_alpha,cmax,c1,c2,ind,constraint_rank";

inline std::string batch_summary_csv(const std::vector<BatchRow>& rows) {
  std::ostringstream s;
  s << kBatchSummaryHeader << "\n";
  for (const BatchRow& r : rows) {
    const ConditionReport& c = r.conditions;
    s << r.seed << "," << r.num_users << "," << r.num_nodes << "," << io::format_double(c.rho_smax)
      << "," << io::format_double(c.rho_s_alpha.minCoeff()) << "," << int(c.cmax_holds) << ","
      << int(c.c1_holds) << "," << int(c.c2_holds) << "," << c.degeneracy_index << ","
      << c.constraint_rank << "\n";
  }
  return s.str();
}

inline constexpr const char* kBatchEquilibriumHeader =
    "seed,K,A,game_hash,converged,max_kkt_residual,potential,multistart_spread,multistart_agree,"
    "forest,max_face_dim";

inline std::string batch_equilibrium_csv(const std::vector<BatchRow>& rows) {
  std::ostringstream s;
  s << kBatchEquilibriumHeader << "\n";
  for (const BatchRow& r : rows)
    s << r.seed << "," << r.num_users << "," << r.num_nodes << "," << r.game_hash << ","
      << int(r.all_converged) << "," << io::format_double(r.max_residual) << ","
      << io::format_double(r.potential_value) << "," << io::format_double(r.multistart_spread)
      << "," << int(r.multistart_agree) << "," << int(r.forest) << "," << r.max_face_dim << "\n";
  return s.str();
}

}  // namespace macgame
