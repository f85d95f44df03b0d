#pragma once

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "macgame/macgame.hpp"
#include "macgame/verify.hpp"

namespace macgame::cli {

enum ExitCode : int {
  kOk = 0,
  kFailed = 1,  // `verify` found a violated invariant
  kUsage = 2,
  kNotConverged = 3,
  kIo = 4,
};

/// Everything a subcommand may need; filled from an optional config document and the command line.
struct ScenarioConfig {
  // game source: a document, or a random spec
  std::optional<std::string> game_file;
  std::optional<int> users;
  std::optional<int> nodes;
  std::uint64_t seed = 1;
  std::string distribution = "exponential";
  std::optional<std::string> collinear;

  std::string solver = "pgd";
  std::optional<double> tol;
  int max_iters = 200000;
  double support_tol = kDefaultSupportTol;

  double step = 0.1;
  double horizon = 1000.0;
  std::string stop = "face";
  int stride = 1;
  std::string init = "uniform";
  std::optional<std::uint64_t> init_seed;
  std::optional<std::string> init_file;
  std::vector<int> vertex;

  std::optional<std::string> profile_file;
  std::optional<std::string> out;
  int count = 200;
  int starts = 10;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double parse_collinear(const std::string& spec) {
  std::string v = spec;
  if (v.rfind("c=", 0) == 0) v = v.substr(2);
  try {
    std::size_t used = 0;
    const double c = std::stod(v, &used);
    if (used != v.size() || !(c > 0.0)) throw std::invalid_argument(v);
    return c;
  } catch (const std::exception&) {
    throw UsageError("--collinear expects c=<positive factor>, got '" + spec + "'");
  }
}

inline Game load_game(const ScenarioConfig& cfg) {
  const bool random_spec = cfg.users || cfg.nodes;
  if (cfg.game_file && random_spec)
    throw UsageError("give either --game or --users/--nodes, not both");
  if (cfg.game_file) return io::read_game(*cfg.game_file);
  if (!cfg.users || !cfg.nodes) throw UsageError("a game needs --game FILE or both --users and --nodes");
  const GainDistribution dist = parse_gain_distribution(cfg.distribution);
  if (cfg.collinear) {
    const double c = parse_collinear(*cfg.collinear);
    std::vector<double> factors;
    double f = 1.0;
    for (int k = 0; k < *cfg.users; ++k, f *= c) factors.push_back(f);
    return collinear_game(*cfg.nodes, factors, cfg.seed, dist);
  }
  RandomGameOptions opts;
  opts.distribution = dist;
  return random_game(*cfg.users, *cfg.nodes, cfg.seed, opts);
}

inline PowerProfile load_profile_document(const Game& game, const std::string& path) {
  const io::json doc = io::parse(io::read_file(path), path);
  return io::profile_from_json(game, doc.is_object() && doc.contains("profile") ? doc.at("profile") : doc);
}

inline PowerProfile initial_profile(const Game& game, const ScenarioConfig& cfg) {
  if (cfg.init == "uniform") return uniform_profile(game);
  if (cfg.init == "random") {
    std::mt19937_64 rng(cfg.init_seed.value_or(cfg.seed));
    return random_interior_profile(game, rng);
  }
  if (cfg.init == "vertex") {
    if (Index(cfg.vertex.size()) != game.num_users())
      throw UsageError("--init vertex needs --vertex with one node index per user");
    return vertex_profile(game, std::vector<Index>(cfg.vertex.begin(), cfg.vertex.end()));
  }
  if (cfg.init == "file") {
    if (!cfg.init_file) throw UsageError("--init file needs --init-file");
    return load_profile_document(game, *cfg.init_file);
  }
  throw UsageError("unknown --init '" + cfg.init + "'");
}

inline void emit(const ScenarioConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.out)
    io::write_file(*cfg.out, text);
  else
    out << text;
}

inline SolverOptions solver_options(const ScenarioConfig& cfg) {
  SolverOptions o;
  o.tol = cfg.tol.value_or(1e-12);
  o.max_iters = cfg.max_iters;
  o.support_tol = cfg.support_tol;
  o.seed = cfg.init == "random" ? std::optional(cfg.init_seed.value_or(cfg.seed)) : std::nullopt;
  return o;
}

inline EquilibriumReport solve_with(const Game& game, const std::optional<PowerProfile>& init,
                                    const ScenarioConfig& cfg) {
  if (cfg.solver == "pgd") return solve_potential_min(game, init, solver_options(cfg));
  if (cfg.solver == "swf") return solve_sequential_waterfilling(game, init, solver_options(cfg));
  throw UsageError("unknown --solver '" + cfg.solver + "'");
}

inline int cmd_generate(const ScenarioConfig& cfg, std::ostream& out) {
  if (cfg.game_file) throw UsageError("generate builds a random game; --game is not accepted");
  const Game game = load_game(cfg);
  const std::string doc = io::game_to_json(game).dump(2) + "\n";
  if (cfg.out) {
    io::write_file(*cfg.out, doc);
    out << "K=" << game.num_users() << " A=" << game.num_nodes() << " seed=" << cfg.seed
        << " hash=" << io::game_hash(game) << "\n";
  } else {
    out << doc;
  }
  return kOk;
}

inline int cmd_solve(const ScenarioConfig& cfg, std::ostream& out, std::ostream& err) {
  const Game game = load_game(cfg);
  const PowerProfile init = initial_profile(game, cfg);
  const EquilibriumReport rep = solve_with(game, init, cfg);
  io::json doc = io::report_to_json(rep);
  doc["game_hash"] = io::game_hash(game);
  emit(cfg, doc.dump(2) + "\n", out);
  err << rep.solver << ": " << (rep.converged ? "converged" : "NOT converged") << " after "
      << rep.iterations << " iterations, kkt_residual=" << rep.kkt_residual
      << " potential=" << io::format_double(rep.potential_value) << "\n";
  return rep.converged ? kOk : kNotConverged;
}

inline int cmd_check(const ScenarioConfig& cfg, std::ostream& out) {
  const Game game = load_game(cfg);
  io::json doc = io::conditions_to_json(check_conditions(game));
  doc["game_hash"] = io::game_hash(game);
  doc["num_users"] = game.num_users();
  doc["num_nodes"] = game.num_nodes();
  emit(cfg, doc.dump(2) + "\n", out);
  return kOk;
}

inline int cmd_simulate(const ScenarioConfig& cfg, std::ostream& out, std::ostream& err) {
  const Game game = load_game(cfg);
  const PowerProfile init = initial_profile(game, cfg);

  // KL reference: the equilibrium of the face the orbit lives on
  const Mask face = positive_support(init);
  const bool interior = (face.array() || !game.access().array()).all();
  PowerProfile reference = solve_potential_min(game).profile;
  if (!interior) {
    const ReducedGame reduced = reduced_game(game, face);
    reference = reduced.embed(game, solve_potential_min(reduced.game).profile);
  }
  reference = clean_support(game, reference, cfg.support_tol);

  IntegrateOptions opts;
  opts.step = cfg.step;
  opts.horizon = cfg.horizon;
  opts.residual_tol = cfg.tol.value_or(1e-5);
  opts.stride = cfg.stride;
  opts.face_stopping = cfg.stop == "face";
  opts.reference = reference;
  Trajectory tr = integrate(game, init, opts);

  // equilibria beyond the generic degeneracy may form a continuum; monitor the orbit's own limit
  const Degeneracy deg = degeneracy_index(game);
  const bool excess = deg.index > generic_degeneracy_index(game.num_users(), game.num_nodes());
  if (excess) recompute_kl(tr, clean_support(game, tr.final_profile(), cfg.support_tol));

  const std::string csv = io::trajectory_csv(tr);
  io::json meta = io::trajectory_metadata(game, tr, opts,
                                          cfg.init == "random" ? std::optional(cfg.init_seed.value_or(cfg.seed))
                                                               : std::nullopt);
  meta["kl_reference"] = excess ? "final_sample" : "solver_equilibrium";
  meta["distance_to_reference"] =
      (tr.final_profile().allocation() - reference.allocation()).cwiseAbs().maxCoeff();
  if (cfg.out) {
    io::write_file(*cfg.out, csv);
    io::write_file(*cfg.out + ".meta.json", meta.dump(2) + "\n");
    out << meta.dump(2) << "\n";
  } else {
    out << csv;
    err << meta.dump(2) << "\n";
  }
  return tr.terminated_reason == Termination::kConverged ? kOk : kNotConverged;
}

inline int cmd_verify(const ScenarioConfig& cfg, std::ostream& out) {
  const Game game = load_game(cfg);
  VerifyOptions vo;
  vo.seed = cfg.seed;
  vo.support_tol = cfg.support_tol;
  std::vector<InvariantResult> results = verify_game(game, vo);
  std::optional<PowerProfile> q;
  if (cfg.profile_file) {
    q = load_profile_document(game, *cfg.profile_file);
  } else {
    q = solve_potential_min(game, std::nullopt, solver_options(cfg)).profile;
  }
  for (InvariantResult& r : verify_equilibrium(game, *q, vo)) results.push_back(std::move(r));
  bool all = true;
  for (const InvariantResult& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " value=" << r.value
        << " threshold=" << r.threshold << "\n";
    all = all && r.passed;
  }
  return all ? kOk : kFailed;
}

inline int cmd_batch(const ScenarioConfig& cfg, std::ostream& out) {
  if (cfg.game_file) throw UsageError("batch draws its own games; --game is not accepted");
  BatchOptions bo;
  bo.count = cfg.count;
  bo.max_users = cfg.users.value_or(4);
  bo.max_nodes = cfg.nodes.value_or(4);
  bo.seed = cfg.seed;
  bo.starts = cfg.starts;
  bo.distribution = parse_gain_distribution(cfg.distribution);
  bo.solver = solver_options(cfg);
  bo.solver.seed.reset();
  const std::vector<BatchRow> rows = run_batch(bo);

  if (cfg.out) {
    io::write_file(*cfg.out, batch_summary_csv(rows));
    io::write_file(*cfg.out + ".equilibria.csv", batch_equilibrium_csv(rows));
  } else {
    out << batch_summary_csv(rows);
  }
  int multi = 0, conv = 0, forest = 0, face_ok = 0, k2 = 0, cond_fail = 0;
  for (const BatchRow& r : rows) {
    conv += r.all_converged;
    multi += r.multistart_agree;
    forest += r.forest;
    face_ok += r.max_face_dim <= r.num_nodes - 1;
    if (r.num_users >= 2) {
      ++k2;
      cond_fail += !r.conditions.cmax_holds && !r.conditions.c1_holds && !r.conditions.c2_holds;
    }
  }
  std::ostream& summary = cfg.out ? out : std::cerr;
  const auto n = rows.size();
  summary << "instances: " << n << "\nconverged: " << conv << "/" << n
          << "\nmultistart agreement: " << multi << "/" << n << "\nforest equilibria: " << forest
          << "/" << n << "\nface_dim <= A-1: " << face_ok << "/" << n
          << "\nCmax, C1, C2 all fail (K >= 2): " << cond_fail << "/" << k2 << "\n";
  return conv == int(n) ? kOk : kNotConverged;
}

inline void add_game_options(CLI::App* sub, ScenarioConfig& cfg) {
  sub->add_option("--game", cfg.game_file, "Game document to load");
  sub->add_option("-K,--users", cfg.users, "Number of users")->check(CLI::Range(1, 1 << 20));
  sub->add_option("-A,--nodes", cfg.nodes, "Number of nodes")->check(CLI::Range(1, 1 << 20));
  sub->add_option("--seed", cfg.seed, "Random seed");
  sub->add_option("--distribution", cfg.distribution, "Gain law")
      ->check(CLI::IsMember({"exponential", "log-uniform"}));
  sub->add_option("--out", cfg.out, "Output path (default: stdout)");
}

inline void add_solver_options(CLI::App* sub, ScenarioConfig& cfg) {
  sub->add_option("--solver", cfg.solver, "Equilibrium solver")->check(CLI::IsMember({"pgd", "swf"}));
  sub->add_option("--tol", cfg.tol, "Convergence tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--max-iters", cfg.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
  sub->add_option("--support-tol", cfg.support_tol, "Support threshold relative to the budget")
      ->check(CLI::NonNegativeNumber);
}

inline void add_init_options(CLI::App* sub, ScenarioConfig& cfg) {
  sub->add_option("--init", cfg.init, "Initial profile")
      ->check(CLI::IsMember({"uniform", "random", "vertex", "file"}));
  sub->add_option("--init-seed", cfg.init_seed, "Seed for --init random (default: --seed)");
  sub->add_option("--init-file", cfg.init_file, "Profile document for --init file");
  sub->add_option("--vertex", cfg.vertex, "Node index per user for --init vertex")->delimiter(',');
}

/// Turns a config document's keys into leading command-line arguments.
inline std::vector<std::string> config_arguments(const std::string& path) {
  const io::json doc = io::parse(io::read_file(path), path);
  if (!doc.is_object()) throw UsageError("config document must be an object");
  std::vector<std::string> args;
  for (const auto& [key, value] : doc.items()) {
    args.push_back("--" + key);
    if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
      args.push_back(joined);
    } else {
      args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
  return args;
}

/// Entry point; `args` excludes the program name.
inline int run(std::vector<std::string> args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  // --config FILE right after the subcommand: its keys become defaults the command line overrides
  for (std::size_t i = 1; i + 1 < args.size(); ++i) {
    if (args[i] != "--config") continue;
    try {
      std::vector<std::string> from_file = config_arguments(args[i + 1]);
      args.erase(args.begin() + std::ptrdiff_t(i), args.begin() + std::ptrdiff_t(i + 2));
      args.insert(args.begin() + 1, from_file.begin(), from_file.end());
    } catch (const IoError& e) {
      err << "error: " << e.what() << "\n";
      return kIo;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kUsage;
    }
    break;
  }

  ScenarioConfig cfg;
  CLI::App app{"Power allocation games on parallel multiple access channels", "macgame"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  CLI::App* generate = app.add_subcommand("generate", "Write a random game document");
  add_game_options(generate, cfg);
  generate->add_option("--collinear", cfg.collinear, "Degenerate game: user k gains = c^k times a common row (c=2.0)");

  CLI::App* solve = app.add_subcommand("solve", "Compute a Nash equilibrium");
  add_game_options(solve, cfg);
  add_solver_options(solve, cfg);
  add_init_options(solve, cfg);
  solve->add_option("--collinear", cfg.collinear, "Use a collinear-gain game");

  CLI::App* check = app.add_subcommand("check", "Audit the uniqueness conditions and degeneracy");
  add_game_options(check, cfg);
  check->add_option("--collinear", cfg.collinear, "Use a collinear-gain game");

  CLI::App* simulate = app.add_subcommand("simulate", "Integrate the replicator dynamics");
  add_game_options(simulate, cfg);
  add_init_options(simulate, cfg);
  simulate->add_option("--collinear", cfg.collinear, "Use a collinear-gain game");
  simulate->add_option("--step", cfg.step, "RK4 step size")->check(CLI::PositiveNumber);
  simulate->add_option("--horizon", cfg.horizon, "Final time")->check(CLI::PositiveNumber);
  simulate->add_option("--tol", cfg.tol, "Stopping KKT residual")->check(CLI::PositiveNumber);
  simulate->add_option("--stop", cfg.stop, "Stopping residual: of the initial face, or of the full game")
      ->check(CLI::IsMember({"face", "full"}));
  simulate->add_option("--stride", cfg.stride, "Store every n-th step")->check(CLI::PositiveNumber);
  simulate->add_option("--support-tol", cfg.support_tol, "Support threshold for the KL reference")
      ->check(CLI::NonNegativeNumber);

  CLI::App* verify = app.add_subcommand("verify", "Run the invariant suite on a game (and profile)");
  add_game_options(verify, cfg);
  add_solver_options(verify, cfg);
  verify->add_option("--collinear", cfg.collinear, "Use a collinear-gain game");
  verify->add_option("--profile", cfg.profile_file, "Profile or report document to check");

  CLI::App* batch = app.add_subcommand("batch", "Audit many random games (K, A drawn up to --users/--nodes)");
  add_game_options(batch, cfg);
  add_solver_options(batch, cfg);
  batch->add_option("--count", cfg.count, "Number of instances")->check(CLI::PositiveNumber);
  batch->add_option("--starts", cfg.starts, "Random solver inits per instance")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(cfg, out);
    if (solve->parsed()) return cmd_solve(cfg, out, err);
    if (check->parsed()) return cmd_check(cfg, out);
    if (simulate->parsed()) return cmd_simulate(cfg, out, err);
    if (verify->parsed()) return cmd_verify(cfg, out);
    if (batch->parsed()) return cmd_batch(cfg, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const ParseError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {  // DomainError-like input problems, ShapeError
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::domain_error& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace macgame::cli
