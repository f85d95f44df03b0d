#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace macgame;
using io::json;

TEST(GameDocument, RoundTripIsBitExact) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = testing_support::random_dims(rng, 5, 5);
    const Game g = testing_support::random_general_game(rng, d.users, d.nodes);
    const Game back = io::game_from_json(json::parse(io::game_to_json(g).dump()));
    EXPECT_EQ(back.gains(), g.gains());
    EXPECT_EQ(back.noise(), g.noise());
    EXPECT_EQ(back.bandwidths(), g.bandwidths());
    EXPECT_EQ(back.budgets(), g.budgets());
    EXPECT_EQ(io::game_hash(back), io::game_hash(g));
  }
}

TEST(GameDocument, ProvenanceAndAccessSurvive) {
  Mask access(2, 2);
  access << true, false, true, true;
  const Game base = random_game(2, 2, 42);
  const Game g(base.gains(), base.noise(), base.bandwidths(), base.budgets(), access, base.provenance());
  const Game back = io::game_from_json(io::game_to_json(g));
  EXPECT_EQ(back.access(), access);
  EXPECT_EQ(back.provenance().seed, std::optional<std::uint64_t>(42));
  EXPECT_EQ(back.provenance().gain_distribution, std::optional<std::string>("exponential"));
}

TEST(GameDocument, FlatRowMajorGainsAccepted) {
  const json doc = json::parse(R"({"num_users": 2, "num_nodes": 2, "gains": [2, 1, 1, 2],
      "noise": [1, 1], "bandwidths": [1, 1], "budgets": [1, 1]})");
  EXPECT_EQ(io::game_from_json(doc).gains(), testing_support::two_by_two().gains());
}

TEST(GameDocument, Errors) {
  EXPECT_THROW(io::game_from_json(json::parse(R"({"num_users": 1})")), ParseError);
  EXPECT_THROW(io::game_from_json(json::parse(R"({"num_users": 1, "num_nodes": 2, "gains": [[1, 1, 1]],
      "noise": [1, 1], "bandwidths": [1, 1], "budgets": [1]})")),
               ShapeError);
  EXPECT_THROW(io::game_from_json(json::parse(R"({"num_users": 1, "num_nodes": 1, "gains": [["x"]],
      "noise": [1], "bandwidths": [1], "budgets": [1]})")),
               ParseError);
  EXPECT_THROW(io::game_from_json(json::parse(R"({"num_users": 1, "num_nodes": 1, "gains": [[0]],
      "noise": [1], "bandwidths": [1], "budgets": [1]})")),
               DomainError);
  EXPECT_THROW(io::parse("{not json", "inline"), ParseError);
  EXPECT_THROW(io::read_file("/nonexistent/dir/file.json"), IoError);
  EXPECT_THROW(io::write_file("/nonexistent/dir/file.json", "x"), IoError);
}

TEST(GameHash, DependsOnContentOnly) {
  const Game a = random_game(2, 3, 5);
  const Game b = a.with_provenance({});
  EXPECT_EQ(io::game_hash(a), io::game_hash(b));
  EXPECT_EQ(io::game_hash(a).size(), 16u);
  EXPECT_NE(io::game_hash(a), io::game_hash(random_game(2, 3, 6)));
}

TEST(Report, Fields) {
  const EquilibriumReport r = solve_potential_min(testing_support::two_by_two());
  const json doc = io::report_to_json(r);
  for (const char* key : {"profile", "kkt_residual", "iterations", "converged", "potential_value",
                          "multipliers", "support", "solver", "tolerance", "seed", "slackness"})
    EXPECT_TRUE(doc.contains(key)) << key;
  EXPECT_EQ(doc["support"], json::parse("[[1,0],[0,1]]"));
  EXPECT_EQ(doc["seed"], nullptr);
  const PowerProfile p = io::profile_from_json(testing_support::two_by_two(), doc["profile"]);
  EXPECT_EQ(p.allocation(), r.profile.allocation());
}

TEST(Conditions, Fields) {
  const json doc = io::conditions_to_json(check_conditions(random_game(3, 4, 1)));
  EXPECT_EQ(doc["degeneracy_index"], 5);
  EXPECT_EQ(doc["cmax_holds"], false);
  EXPECT_EQ(doc["rho_s_alpha"].size(), 4u);
}

TEST(FormatDouble, SeventeenDigitsRoundTrip) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);
    EXPECT_EQ(std::stod(io::format_double(x)), x);
  }
}

TEST(TrajectoryCsv, HeaderAndRows) {
  EXPECT_EQ(io::trajectory_csv_header(2, 2), "t,p_1_1,p_1_2,p_2_1,p_2_2,potential,kl,kkt_residual,clamped_mass");
  const Game g = testing_support::two_by_two();
  IntegrateOptions o;
  o.horizon = 0.3;
  o.residual_tol = 1e-300;
  o.reference = PowerProfile(g, Matrix::Identity(2, 2));
  const Trajectory tr = integrate(g, uniform_profile(g), o);
  const std::string csv = io::trajectory_csv(tr);
  std::istringstream in(csv);
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) {
    if (rows >= 0) {
      EXPECT_EQ(std::count(line.begin(), line.end(), ','), 8);
    }
    ++rows;
  }
  EXPECT_EQ(rows, int(tr.times.size()));

  // unsupported reference: kl column carries "inf"
  o.reference = PowerProfile(g, Matrix::Identity(2, 2));
  o.face_stopping = false;
  const Trajectory vtr = integrate(g, vertex_profile(g, {1, 0}), o);
  EXPECT_NE(io::trajectory_csv(vtr).find(",inf,"), std::string::npos);
  const json meta = io::trajectory_metadata(g, vtr, o, std::nullopt);
  EXPECT_EQ(meta["game_hash"], io::game_hash(g));
  EXPECT_EQ(meta["terminated_reason"], "horizon");
}

TEST(Batch, DeterministicAndThreadIndependent) {
  BatchOptions o;
  o.count = 12;
  o.starts = 3;
  const std::vector<BatchRow> a = run_batch(o, 1), b = run_batch(o, 3);
  ASSERT_EQ(a.size(), 12u);
  EXPECT_EQ(batch_summary_csv(a), batch_summary_csv(b));
  EXPECT_EQ(batch_equilibrium_csv(a), batch_equilibrium_csv(b));
  EXPECT_EQ(batch_summary_csv(a).substr(0, batch_summary_csv(a).find('\n')),
            "seed,K,A,rho_smax,min_rho_s_alpha,cmax,c1,c2,ind,constraint_rank");
  for (const BatchRow& r : a) {
    EXPECT_GE(r.num_users, 1);
    EXPECT_LE(r.num_users, 4);
    EXPECT_LE(r.num_nodes, 4);
    EXPECT_TRUE(r.all_converged);
  }
}

TEST(Batch, ThreadCountFromEnvironment) {
  setenv("MACGAME_THREADS", "3", 1);
  EXPECT_EQ(batch_threads(), 3u);
  setenv("MACGAME_THREADS", "junk", 1);
  EXPECT_GE(batch_threads(), 1u);
  unsetenv("MACGAME_THREADS");
}

TEST(Verify, SuitePassesOnGameAndEquilibrium) {
  const Game g = random_game(3, 3, 4);
  VerifyOptions o;
  o.samples = 200;
  for (const InvariantResult& r : verify_game(g, o)) EXPECT_TRUE(r.passed) << r.name << " " << r.value;
  for (const InvariantResult& r : verify_equilibrium(g, solve_potential_min(g).profile, o))
    EXPECT_TRUE(r.passed) << r.name << " " << r.value;
  const auto bad = verify_equilibrium(g, uniform_profile(g), o);
  EXPECT_FALSE(bad[0].passed);
}
