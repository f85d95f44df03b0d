#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "macgame/dynamics.hpp"
#include "macgame/equilibrium.hpp"
#include "macgame/game.hpp"
#include "macgame/structure.hpp"

// Documents are JSON. Doubles are written in shortest round-trip form, so any
// value read from a 17-significant-digit decimal is written back bit-exactly.

namespace macgame::io {

using json = nlohmann::json;

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline json to_json(const Mask& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j) ? 1 : 0);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace detail {

inline const json& field(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key))
    throw ParseError(std::string("missing field '") + key + "'");
  return doc.at(key);
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + " must be a number");
  return j.get<double>();
}

inline Vector vector_of(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + " must be an array");
  Vector v(Index(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(Index(i)) = number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

inline Matrix matrix_of(const json& j, Index rows, Index cols, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + " must be an array");
  Matrix m(rows, cols);
  if (Index(j.size()) == rows && (rows == 0 || j[0].is_array())) {
    for (Index i = 0; i < rows; ++i) {
      const json& row = j[std::size_t(i)];
      if (!row.is_array() || Index(row.size()) != cols)
        throw ShapeError(where + " row " + std::to_string(i) + " must have " +
                         std::to_string(cols) + " entries");
      for (Index c = 0; c < cols; ++c) m(i, c) = number(row[std::size_t(c)], where);
    }
  } else if (Index(j.size()) == rows * cols) {  // flat row-major
    for (Index i = 0; i < rows; ++i)
      for (Index c = 0; c < cols; ++c) m(i, c) = number(j[std::size_t(i * cols + c)], where);
  } else {
    throw ShapeError(where + " must be " + std::to_string(rows) + " x " + std::to_string(cols));
  }
  return m;
}

}  // namespace detail

inline json game_to_json(const Game& g) {
  json doc;
  doc["num_users"] = g.num_users();
  doc["num_nodes"] = g.num_nodes();
  doc["gains"] = to_json(g.gains());
  doc["noise"] = to_json(g.noise());
  doc["bandwidths"] = to_json(g.bandwidths());
  doc["budgets"] = to_json(g.budgets());
  if (g.restricted()) doc["access"] = to_json(g.access());
  if (g.provenance().seed) doc["seed"] = *g.provenance().seed;
  if (g.provenance().gain_distribution) doc["gain_distribution"] = *g.provenance().gain_distribution;
  return doc;
}

inline Game game_from_json(const json& doc) {
  try {
    const Index K = detail::field(doc, "num_users").get<Index>();
    const Index A = detail::field(doc, "num_nodes").get<Index>();
    if (K < 1 || A < 1) throw DomainError("num_users and num_nodes must be at least 1");
    Matrix gains = detail::matrix_of(detail::field(doc, "gains"), K, A, "gains");
    Vector noise = detail::vector_of(detail::field(doc, "noise"), "noise");
    Vector bw = detail::vector_of(detail::field(doc, "bandwidths"), "bandwidths");
    Vector budgets = detail::vector_of(detail::field(doc, "budgets"), "budgets");
    std::optional<Mask> access;
    if (doc.contains("access")) {
      const Matrix m = detail::matrix_of(doc.at("access"), K, A, "access");
      access = (m.array() != 0.0).matrix();
    }
    Provenance prov;
    if (doc.contains("seed")) prov.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("gain_distribution"))
      prov.gain_distribution = doc.at("gain_distribution").get<std::string>();
    return Game(std::move(gains), std::move(noise), std::move(bw), std::move(budgets),
                std::move(access), std::move(prov));
  } catch (const json::exception& e) {
    throw ParseError(std::string("game document: ") + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << contents;
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline json parse(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(what + ": " + e.what());
  }
}

inline Game read_game(const std::string& path) {
  return game_from_json(parse(read_file(path), path));
}

inline void write_game(const std::string& path, const Game& g) {
  write_file(path, game_to_json(g).dump(2) + "\n");
}

inline PowerProfile profile_from_json(const Game& g, const json& j) {
  return PowerProfile(g, detail::matrix_of(j, g.num_users(), g.num_nodes(), "profile"));
}

/// FNV-1a over the compact document of the game's numeric content.
inline std::string game_hash(const Game& g) {
  json doc = game_to_json(g);
  doc.erase("seed");
  doc.erase("gain_distribution");
  const std::string text = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

inline json report_to_json(const EquilibriumReport& r) {
  json doc;
  doc["solver"] = r.solver;
  doc["profile"] = to_json(r.profile.allocation());
  doc["kkt_residual"] = r.kkt_residual;
  doc["iterations"] = r.iterations;
  doc["converged"] = r.converged;
  doc["potential_value"] = r.potential_value;
  doc["multipliers"] = to_json(r.multipliers);
  doc["support"] = to_json(r.support);
  doc["slackness"] = to_json(r.slackness);
  doc["forest"] = r.forest;
  doc["face_dim"] = r.face_dim;
  doc["tolerance"] = r.tolerance;
  doc["support_tol"] = r.support_tol;
  doc["seed"] = r.seed ? json(*r.seed) : json(nullptr);
  return doc;
}

inline json conditions_to_json(const ConditionReport& c) {
  json doc;
  doc["rho_smax"] = c.rho_smax;
  doc["rho_s_alpha"] = to_json(c.rho_s_alpha);
  doc["cmax_holds"] = c.cmax_holds;
  doc["c1_holds"] = c.c1_holds;
  doc["c2_holds"] = c.c2_holds;
  doc["c2_min_eigenvalue"] = to_json(c.c2_min_eigenvalue);
  doc["spectral_lower_bound"] = c.spectral_lower_bound.value;
  doc["spectral_lower_bound_applicable"] = c.spectral_lower_bound.applicable;
  doc["smax_rank"] = c.spectral_lower_bound.rank;
  doc["degeneracy_index"] = c.degeneracy_index;
  doc["constraint_rank"] = c.constraint_rank;
  return doc;
}

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string trajectory_csv_header(Index K, Index A) {
  std::string h = "t";
  for (Index k = 1; k <= K; ++k)
    for (Index a = 1; a <= A; ++a) h += ",p_" + std::to_string(k) + "_" + std::to_string(a);
  h += ",potential,kl,kkt_residual,clamped_mass";
  return h;
}

/// One row per stored sample; kl is empty without a reference and "inf" when unbounded.
inline std::string trajectory_csv(const Trajectory& tr) {
  const Index K = tr.profiles.front().num_users(), A = tr.profiles.front().num_nodes();
  std::ostringstream s;
  s << trajectory_csv_header(K, A) << "\n";
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    s << format_double(tr.times[i]);
    const Matrix& p = tr.profiles[i].allocation();
    for (Index k = 0; k < K; ++k)
      for (Index a = 0; a < A; ++a) s << "," << format_double(p(k, a));
    s << "," << format_double(tr.potential_values[i]) << ",";
    if (tr.kl_values) {
      const Divergence& d = (*tr.kl_values)[i];
      s << (d.infinite ? std::string("inf") : format_double(d.value));
    }
    s << "," << format_double(tr.kkt_residuals[i]) << "," << format_double(tr.clamped_mass[i])
      << "\n";
  }
  return s.str();
}

inline json trajectory_metadata(const Game& g, const Trajectory& tr, const IntegrateOptions& opts,
                                std::optional<std::uint64_t> init_seed) {
  json doc;
  doc["game_hash"] = game_hash(g);
  doc["seed"] = g.provenance().seed ? json(*g.provenance().seed) : json(nullptr);
  doc["init_seed"] = init_seed ? json(*init_seed) : json(nullptr);
  doc["step"] = opts.step;
  doc["final_step"] = tr.step_size;
  doc["horizon"] = opts.horizon;
  doc["residual_tol"] = opts.residual_tol;
  doc["clamp_tol"] = opts.clamp_tol;
  doc["stride"] = opts.stride;
  doc["terminated_reason"] = std::string(to_string(tr.terminated_reason));
  doc["steps"] = tr.steps;
  doc["rejected_steps"] = tr.rejected_steps;
  doc["underflow_events"] = tr.underflow_events;
  doc["total_clamped"] = tr.total_clamped;
  doc["final_time"] = tr.times.back();
  doc["final_kkt_residual"] = tr.final_residual();
  doc["samples"] = tr.times.size();
  return doc;
}

}  // namespace macgame::io
