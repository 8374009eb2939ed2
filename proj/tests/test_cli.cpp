#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "ldbar/config.hpp"
#include "ldbar/report.hpp"

using Catch::Matchers::ContainsSubstring;
using ldbar::Complex;
using ldbar::GridField;
using ldbar::RunConfig;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const char* tag) {
  const fs::path p = fs::temp_directory_path() / (std::string("ldbar-cli-") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config text fills defaults and rejects malformed input", "[cli]") {
  const RunConfig def = ldbar::parse_config("");
  CHECK(def.problem.weight.m == 6);
  CHECK(def.problem.weight.s == 5);
  CHECK(def.problem.h == 1.0 / 256.0);  // orchestrator default is the fine grid
  CHECK(def.problem.max_annulus == 8);
  CHECK(def.problem.max_word_length == 12);
  CHECK(def.problem.bump_radius == 0.2);
  CHECK(def.t == 0.7);

  const RunConfig cfg = ldbar::parse_config(R"({
    "action": "boundary",
    "weight": {"m": 8, "s": 7},
    "grid": {"n_grid": 5, "h": 0.015625},
    "truncation": {"max_annulus": 6, "max_word_length": 10},
    "rhs": {"bump_radius": 0.15, "bump_amplitude": 2.0, "modulation_depth": 0.25},
    "seed": 42, "t": 1.25,
    "sweep": {"deltas": [0.2, 0.1], "offset": 0.25, "levels": 3}
  })");
  CHECK(cfg.problem.model.action == ldbar::TransversalAction::boundary);
  CHECK(cfg.problem.weight.m == 8);
  CHECK(cfg.problem.n_grid == 5);
  CHECK(cfg.problem.max_annulus == 6);
  CHECK(cfg.problem.bump_radius == 0.15);
  CHECK(cfg.problem.seed == 42);
  CHECK(cfg.t == 1.25);
  CHECK(cfg.sweep_deltas == std::vector<double>{0.2, 0.1});

  CHECK_THROWS_WITH(ldbar::parse_config(R"({"wieght": {}})"),
                    ContainsSubstring("unknown key \"wieght\""));
  CHECK_THROWS_WITH(ldbar::parse_config(R"({"weight": {"m": "six"}})"),
                    ContainsSubstring("\"m\" has the wrong type"));
  CHECK_THROWS_WITH(ldbar::parse_config(R"({"action": "sideways"})"),
                    ContainsSubstring("rotations"));
  CHECK_THROWS_WITH(ldbar::parse_config("[1, 2]"), ContainsSubstring("top level"));
  CHECK_THROWS_WITH(ldbar::parse_config("{nope"), ContainsSubstring("parse error"));
}

TEST_CASE("config validation names the violated constraint", "[cli]") {
  RunConfig cfg;
  CHECK_NOTHROW(ldbar::validate_config(cfg, "solve"));

  RunConfig bad = cfg;
  bad.lemma_samples = 0;
  CHECK_THROWS_WITH(ldbar::validate_config(bad, "lemmas"),
                    ContainsSubstring("lemmas.samples"));
  bad = cfg;
  bad.sweep_deltas.clear();
  CHECK_THROWS_WITH(ldbar::validate_config(bad, "sweep"),
                    ContainsSubstring("sweep.deltas"));
  bad = cfg;
  bad.t = std::nan("");
  CHECK_THROWS_WITH(ldbar::validate_config(bad, "solve"), ContainsSubstring("t must be finite"));

  // the steep-weight precondition is scoped to the transversal sweeps
  RunConfig boundary = cfg;
  boundary.problem.model = ldbar::make_suspension(ldbar::TransversalAction::boundary);
  CHECK_NOTHROW(ldbar::validate_config(boundary, "solve"));
  CHECK_THROWS_WITH(ldbar::validate_config(boundary, "sweep"),
                    ContainsSubstring("s <= 2(k+1) for boundary action"));
  boundary.problem.weight = ldbar::make_weight_spec(8, 7);
  CHECK_NOTHROW(ldbar::validate_config(boundary, "sweep"));
}

TEST_CASE("canonical serialization hashes every knob and nothing else", "[cli]") {
  const RunConfig cfg;
  const std::string h = ldbar::config_hash(cfg);
  CHECK(h.size() == 16);
  CHECK(h.find_first_not_of("0123456789abcdef") == std::string::npos);
  CHECK(ldbar::config_hash(cfg) == h);  // pure function of the config

  RunConfig other = cfg;
  other.problem.seed = 2;
  CHECK(ldbar::config_hash(other) != h);
  other = cfg;
  other.t = 0.71;
  CHECK(ldbar::config_hash(other) != h);

  const std::string dump = ldbar::canonical_config_json(cfg).dump();
  CHECK(dump.find("\"action\"") < dump.find("\"weight\""));
  CHECK(dump.find("\"weight\"") < dump.find("\"grid\""));
  CHECK(dump.find("\"seed\"") < dump.find("\"t\""));
}

TEST_CASE("grid fields survive the text round trip exactly", "[cli]") {
  GridField f = ldbar::make_grid_field(4, 1.0 / 32.0, ldbar::GridKind::section);
  ldbar::fill_grid(f, [](Complex z) {
    return Complex(std::sin(3.0 * z.real()), std::cos(2.0 * z.imag())) * std::exp(-std::norm(z));
  });

  const fs::path dir = fresh_dir("grid");
  ldbar::write_grid_field(dir / "f.grid", f);
  const GridField g = ldbar::read_grid_field(dir / "f.grid");
  REQUIRE(g.m == f.m);
  CHECK(g.h == f.h);
  CHECK(g.rho_max == f.rho_max);
  CHECK(g.kind == f.kind);
  REQUIRE(g.samples.size() == f.samples.size());
  for (std::size_t i = 0; i < f.samples.size(); ++i)
    REQUIRE(g.samples[i] == f.samples[i]);  // %.17g keeps doubles bit-exact

  std::ofstream(dir / "bad.grid") << "not-a-grid 1\n";
  CHECK_THROWS_WITH(ldbar::read_grid_field(dir / "bad.grid"),
                    ContainsSubstring("not a grid-field table"));
}

TEST_CASE("manifests carry hash, provenance triples and check status", "[cli]") {
  const RunConfig cfg;
  ldbar::Manifest m("solve", cfg);
  CHECK(m.hash() == ldbar::config_hash(cfg));
  CHECK(m.ok());

  m.add_artifact("leaf_u.grid", "deck_sum_solver", "solve_leaf");
  m.figures()["residual_rel"] = 0.25;
  const fs::path dir = fresh_dir("manifest");
  m.write(dir);

  std::ifstream in(dir / "manifest.json");
  REQUIRE(in.good());
  const auto j = ldbar::OrderedJson::parse(in);
  CHECK(j.at("command") == "solve");
  CHECK(j.at("config_hash") == m.hash());
  CHECK(j.at("status") == "ok");
  CHECK(j.at("figures").at("residual_rel") == 0.25);
  REQUIRE(j.at("artifacts").size() == 1);
  CHECK(j.at("artifacts")[0].at("module") == "deck_sum_solver");
  CHECK(j.at("artifacts")[0].at("operation") == "solve_leaf");
  CHECK(j.at("config").at("weight").at("m") == 6);

  m.fail("demo defect 0.25 is not below 5%");
  CHECK_FALSE(m.ok());
  CHECK(m.status() == "check-failed: demo defect 0.25 is not below 5%");
}
