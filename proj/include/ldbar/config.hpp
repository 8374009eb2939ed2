#pragma once

/* Run configuration: a single JSON file mapped onto the library's problem
 * parameters plus the per-command sweep knobs.  Unknown keys are rejected, the
 * resolved configuration is re-serialized canonically (fixed key order), and
 * the FNV-1a hash of that canonical form stamps every artifact. */

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ldbar/deck.hpp"
#include "ldbar/suspension.hpp"

namespace ldbar {

using OrderedJson = nlohmann::ordered_json;

struct RunConfig {
  ProblemSpec problem;  // CLI default grid is the fine production step
  double t = 0.7;       // leaf parameter for solve/sweep/report
  long long lemma_samples = 100000;
  int lemma_shell_cap = 8;
  long long partition_points = 10000;
  int partition_shell_cap = 8;
  std::vector<double> sweep_deltas{0.4, 0.2, 0.1, 0.05};
  double sweep_offset = 0.5;
  int sweep_levels = 4;

  RunConfig() { problem.h = 1.0 / 256.0; }
};

namespace detail {

inline void require_known_keys(const OrderedJson& j, const char* where,
                               std::initializer_list<const char*> known) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok)
      throw std::invalid_argument("config: unknown key \"" + item.key() + "\" in " + where);
  }
}

template <class T>
inline void read_key(const OrderedJson& j, const char* key, T& into) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument(std::string("config: key \"") + key + "\" has the wrong type");
  }
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  if (text.empty()) return cfg;
  OrderedJson j;
  try {
    j = OrderedJson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: parse error: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  detail::require_known_keys(j, "the top level",
                             {"action", "weight", "grid", "truncation", "rhs", "degree",
                              "laurent_terms", "seed", "t", "lemmas", "partition", "sweep"});

  if (j.contains("action")) {
    const std::string a = j.at("action").get<std::string>();
    if (a == "rotations")
      cfg.problem.model = make_suspension(TransversalAction::rotations);
    else if (a == "boundary")
      cfg.problem.model = make_suspension(TransversalAction::boundary);
    else
      throw std::invalid_argument("config: action must be \"rotations\" or \"boundary\"");
  }
  if (j.contains("weight")) {
    const auto& w = j.at("weight");
    detail::require_known_keys(w, "weight", {"m", "s"});
    detail::read_key(w, "m", cfg.problem.weight.m);
    detail::read_key(w, "s", cfg.problem.weight.s);
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    detail::require_known_keys(g, "grid", {"n_grid", "h"});
    detail::read_key(g, "n_grid", cfg.problem.n_grid);
    detail::read_key(g, "h", cfg.problem.h);
  }
  if (j.contains("truncation")) {
    const auto& tr = j.at("truncation");
    detail::require_known_keys(tr, "truncation", {"max_annulus", "max_word_length"});
    detail::read_key(tr, "max_annulus", cfg.problem.max_annulus);
    detail::read_key(tr, "max_word_length", cfg.problem.max_word_length);
  }
  if (j.contains("rhs")) {
    const auto& r = j.at("rhs");
    detail::require_known_keys(r, "rhs", {"bump_radius", "bump_amplitude", "modulation_depth"});
    detail::read_key(r, "bump_radius", cfg.problem.bump_radius);
    detail::read_key(r, "bump_amplitude", cfg.problem.bump_amplitude);
    detail::read_key(r, "modulation_depth", cfg.problem.modulation_depth);
  }
  detail::read_key(j, "degree", cfg.problem.degree);
  detail::read_key(j, "laurent_terms", cfg.problem.laurent_terms);
  detail::read_key(j, "seed", cfg.problem.seed);
  detail::read_key(j, "t", cfg.t);
  if (j.contains("lemmas")) {
    const auto& l = j.at("lemmas");
    detail::require_known_keys(l, "lemmas", {"samples", "shell_cap"});
    detail::read_key(l, "samples", cfg.lemma_samples);
    detail::read_key(l, "shell_cap", cfg.lemma_shell_cap);
  }
  if (j.contains("partition")) {
    const auto& p = j.at("partition");
    detail::require_known_keys(p, "partition", {"points", "shell_cap"});
    detail::read_key(p, "points", cfg.partition_points);
    detail::read_key(p, "shell_cap", cfg.partition_shell_cap);
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    detail::require_known_keys(s, "sweep", {"deltas", "offset", "levels"});
    detail::read_key(s, "deltas", cfg.sweep_deltas);
    detail::read_key(s, "offset", cfg.sweep_offset);
    detail::read_key(s, "levels", cfg.sweep_levels);
  }
  return cfg;
}

/* Validation beyond the problem-level checks; `command` scopes the
 * module-specific preconditions to the command that exercises the module. */
inline void validate_config(const RunConfig& cfg, const std::string& command) {
  validate_problem(cfg.problem);
  if (!std::isfinite(cfg.t))
    throw std::invalid_argument("config: leaf parameter t must be finite");
  if (cfg.lemma_samples < 1 || cfg.lemma_samples > 100000000)
    throw std::invalid_argument("config: lemmas.samples must lie in [1, 1e8]");
  if (cfg.lemma_shell_cap < 1 || cfg.lemma_shell_cap > 16)
    throw std::invalid_argument("config: lemmas.shell_cap must lie in [1, 16]");
  if (cfg.partition_points < 1 || cfg.partition_points > 10000000)
    throw std::invalid_argument("config: partition.points must lie in [1, 1e7]");
  if (cfg.partition_shell_cap < 0 || cfg.partition_shell_cap > 12)
    throw std::invalid_argument("config: partition.shell_cap must lie in [0, 12]");
  if (cfg.sweep_deltas.empty())
    throw std::invalid_argument("config: sweep.deltas must not be empty");
  for (double d : cfg.sweep_deltas)
    if (!(d > 0.0) || d > 1.0)
      throw std::invalid_argument("config: sweep.deltas entries must lie in (0, 1]");
  if (!(cfg.sweep_offset > 0.0) || cfg.sweep_offset > 1.0)
    throw std::invalid_argument("config: sweep.offset must lie in (0, 1]");
  if (cfg.sweep_levels < 2 || cfg.sweep_levels > 12)
    throw std::invalid_argument("config: sweep.levels must lie in [2, 12]");
  if (command == "sweep" &&
      cfg.problem.model.action == TransversalAction::boundary &&
      cfg.problem.max_annulus >= 3 && cfg.problem.weight.s <= 6)
    throw std::invalid_argument(
        "config: s <= 2(k+1) for boundary action (the circle-derivative envelope fits k = 2, "
        "so transversal sweeps need s > 6; got s = " + std::to_string(cfg.problem.weight.s) + ")");
}

inline OrderedJson canonical_config_json(const RunConfig& cfg) {
  OrderedJson j;
  j["action"] =
      cfg.problem.model.action == TransversalAction::rotations ? "rotations" : "boundary";
  j["weight"] = {{"m", cfg.problem.weight.m}, {"s", cfg.problem.weight.s}};
  j["grid"] = {{"n_grid", cfg.problem.n_grid}, {"h", cfg.problem.h}};
  j["truncation"] = {{"max_annulus", cfg.problem.max_annulus},
                     {"max_word_length", cfg.problem.max_word_length}};
  j["rhs"] = {{"bump_radius", cfg.problem.bump_radius},
              {"bump_amplitude", cfg.problem.bump_amplitude},
              {"modulation_depth", cfg.problem.modulation_depth}};
  j["degree"] = cfg.problem.degree;
  j["laurent_terms"] = cfg.problem.laurent_terms;
  j["seed"] = cfg.problem.seed;
  j["t"] = cfg.t;
  j["lemmas"] = {{"samples", cfg.lemma_samples}, {"shell_cap", cfg.lemma_shell_cap}};
  j["partition"] = {{"points", cfg.partition_points}, {"shell_cap", cfg.partition_shell_cap}};
  j["sweep"] = {{"deltas", cfg.sweep_deltas},
                {"offset", cfg.sweep_offset},
                {"levels", cfg.sweep_levels}};
  return j;
}

inline std::string config_hash(const RunConfig& cfg) {
  const std::string s = canonical_config_json(cfg).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ldbar
