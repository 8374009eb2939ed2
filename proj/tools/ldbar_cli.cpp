/* Command-line orchestrator: configuration ingestion, one subcommand per
 * module family, artifacts stamped with the config hash.  Exit codes: 0
 * success, 1 validation, 2 numerical-check failure, 3 internal. */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ldbar/config.hpp"
#include "ldbar/correction.hpp"
#include "ldbar/deck.hpp"
#include "ldbar/disk_geometry.hpp"
#include "ldbar/fuchsian.hpp"
#include "ldbar/partition.hpp"
#include "ldbar/report.hpp"

namespace fs = std::filesystem;
using ldbar::Complex;
using ldbar::GridField;
using ldbar::Manifest;
using ldbar::OrderedJson;
using ldbar::RunConfig;

namespace {

// least-squares log-linear decay ratio over occupied shells >= 3; 0 if < 2 points
double shell_ratio_fit(const std::vector<double>& norms, const std::vector<long long>& counts) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int np = 0;
  for (std::size_t n = 3; n < norms.size(); ++n) {
    if (counts[n] == 0 || !(norms[n] > 0.0)) continue;
    const double x = static_cast<double>(n), y = std::log(norms[n]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++np;
  }
  if (np < 2 || !(np * sxx - sx * sx > 0.0)) return 0.0;
  return std::exp((np * sxy - sx * sy) / (np * sxx - sx * sx));
}

const ldbar::DeckElement& representative_element(const ldbar::DeckEnumeration& deck) {
  for (const auto& e : deck.elements)
    if (e.n >= 3) return e;
  return deck.elements.front();
}

int finish(Manifest& manifest, const fs::path& out) {
  manifest.write(out);
  if (!manifest.ok()) {
    std::cerr << "ldbar: " << manifest.status() << "\n";
    return 2;
  }
  return 0;
}

int run_lemmas(const RunConfig& cfg, const fs::path& out, Manifest& manifest) {
  const ldbar::DiskLemmaReport rep =
      ldbar::verify_disk_lemmas(cfg.lemma_samples, cfg.problem.seed, cfg.lemma_shell_cap);
  OrderedJson j;
  j["samples"] = rep.samples;
  j["violations"] = rep.violations;
  j["first_witness"] = rep.first_witness;
  j["max_ratio_density_automorphy"] = rep.max_ratio_density_automorphy;
  j["max_ratio_cover"] = rep.max_ratio_cover;
  j["max_ratio_derivative_global"] = rep.max_ratio_derivative_global;
  j["max_ratio_derivative_disk"] = rep.max_ratio_derivative_disk;
  j["max_ratio_modulus_drop"] = rep.max_ratio_modulus_drop;
  j["max_ratio_one_minus_sq_hi"] = rep.max_ratio_one_minus_sq_hi;
  j["min_ratio_one_minus_sq_lo"] = rep.min_ratio_one_minus_sq_lo;
  j["max_ratio_density_hi"] = rep.max_ratio_density_hi;
  j["min_ratio_density_lo"] = rep.min_ratio_density_lo;
  j["max_ratio_distance"] = rep.max_ratio_distance;
  j["density_floor_quarter"] = rep.density_floor_quarter;
  j["density_floor_half"] = rep.density_floor_half;
  j["density_floor_threequarter"] = rep.density_floor_threequarter;
  j["max_schwarz_pick_rel"] = rep.max_schwarz_pick_rel;
  j["max_distance_invariance_rel"] = rep.max_distance_invariance_rel;
  ldbar::write_text(out / "lemmas.json", j.dump(2) + "\n");
  manifest.add_artifact("lemmas.json", "disk_geometry", "verify_disk_lemmas");
  manifest.figures()["violations"] = rep.violations;
  manifest.figures()["samples"] = rep.samples;
  if (rep.violations != 0)
    manifest.fail("disk lemma sweep recorded " + std::to_string(rep.violations) +
                  " violations; first witness: " + rep.first_witness);
  return finish(manifest, out);
}

int run_partition(const RunConfig& cfg, const fs::path& out, Manifest& manifest) {
  std::ostringstream csv;
  csv << "n,points,max_sum_defect,max_overlap,gradient_sup\n";
  double worst_sum = 0.0, glo = 1e300, ghi = 0.0;
  int worst_overlap = 0;
  for (int n = 0; n <= cfg.partition_shell_cap; ++n) {
    const ldbar::PartitionSweep sw =
        ldbar::partition_invariant_sweep(n, cfg.partition_points, cfg.problem.seed + n);
    const double grad = ldbar::measured_gradient_sup(n, 30);
    worst_sum = std::max(worst_sum, sw.max_sum_defect);
    worst_overlap = std::max(worst_overlap, sw.max_overlap);
    glo = std::min(glo, grad / std::ldexp(1.0, n));
    ghi = std::max(ghi, grad / std::ldexp(1.0, n));
    csv << n << "," << sw.points << "," << ldbar::g17(sw.max_sum_defect) << "," << sw.max_overlap
        << "," << ldbar::g17(grad) << "\n";
  }
  ldbar::write_text(out / "partition.csv", csv.str());
  manifest.add_artifact("partition.csv", "annulus_partition", "partition_invariant_sweep");

  const ldbar::PartitionSpec pspec = ldbar::make_partition_spec();
  double worst_alpha = 0.0, worst_chi = 0.0;
  for (int n : {2, 6}) {
    if (n > cfg.partition_shell_cap) continue;
    const ldbar::RectangleIndex idx{16, 0, n};
    const ldbar::ComposedNorms norms =
        ldbar::composed_regularity_check(idx, ldbar::rectangle_transform(idx));
    worst_alpha = std::max(worst_alpha, norms.alpha_c1);
    worst_chi = std::max(worst_chi, norms.chi_c1);
  }
  manifest.figures()["max_sum_defect"] = worst_sum;
  manifest.figures()["max_overlap"] = worst_overlap;
  manifest.figures()["gradient_band"] = ghi / glo;
  manifest.figures()["pullback_alpha_c1"] = worst_alpha;
  manifest.figures()["pullback_chi_c1"] = worst_chi;
  if (worst_sum > 1e-10)
    manifest.fail("partition sums deviate from 1 by " + ldbar::g17(worst_sum));
  else if (worst_overlap > 4)
    manifest.fail("window overlap " + std::to_string(worst_overlap) + " exceeds 4");
  else if (ghi / glo > 4.0)
    manifest.fail("gradient scaling spread " + ldbar::g17(ghi / glo) + " exceeds the factor-4 band");
  else if (worst_alpha > 8.0 * pspec.c1_bound || worst_chi > 25.0)
    manifest.fail("pulled-back window C1 norms exceed the uniform bound");
  return finish(manifest, out);
}

int run_group(const RunConfig& cfg, const fs::path& out, Manifest& manifest) {
  const ldbar::SurfaceGroup g = cfg.problem.model.group;
  const ldbar::DeckEnumeration deck =
      ldbar::enumerate_deck(g, cfg.problem.max_word_length, cfg.problem.max_annulus);

  const std::vector<int> relation(g.relation.begin(), g.relation.end());
  const double rel_residual = ldbar::identity_residual(ldbar::word_transform(g, relation));
  const double cosh_defect =
      std::abs(std::cosh(ldbar::measured_orbit_separation(deck)) - (1.0 + std::sqrt(2.0)));

  std::ostringstream csv;
  csv << "n,count,count_over_2n\n";
  double cmin = 1e300, cmax = 0.0;
  for (std::size_t n = 0; n < deck.shell_counts.size(); ++n) {
    const double ratio = deck.shell_counts[n] / std::ldexp(1.0, n);
    csv << n << "," << deck.shell_counts[n] << "," << ldbar::g17(ratio) << "\n";
    if (n >= 3 && deck.shell_counts[n] > 0) {
      cmin = std::min(cmin, ratio);
      cmax = std::max(cmax, ratio);
    }
  }
  ldbar::write_text(out / "group.csv", csv.str());
  manifest.add_artifact("group.csv", "surface_group", "enumerate_deck");
  manifest.figures()["elements"] = deck.elements.size();
  manifest.figures()["relation_residual"] = rel_residual;
  manifest.figures()["cosh_apothem_defect"] = cosh_defect;
  manifest.figures()["count_band"] = cmax / cmin;
  if (rel_residual >= 1e-10)
    manifest.fail("octagon relation residual " + ldbar::g17(rel_residual));
  else if (cosh_defect >= 1e-12)
    manifest.fail("cosh of the orbit separation misses 1+sqrt(2) by " + ldbar::g17(cosh_defect));
  else if (cmax / cmin > 4.0)
    manifest.fail("occupied shell counts spread " + ldbar::g17(cmax / cmin) +
                  " exceeds the factor-4 band");
  return finish(manifest, out);
}

int run_solve(const RunConfig& cfg, const fs::path& out, Manifest& manifest) {
  const ldbar::DeckSolver solver(cfg.problem);
  const ldbar::LeafSolution sol = solver.solve(cfg.t);
  const ldbar::EquivarianceReport eq =
      solver.equivariance(cfg.t, representative_element(solver.deck()));

  ldbar::write_grid_field(out / "leaf_u.grid", sol.u);
  manifest.add_artifact("leaf_u.grid", "deck_sum_solver", "solve_leaf");
  std::ostringstream csv;
  csv << "n,count,norm\n";
  for (std::size_t n = 0; n < sol.annulus_norms.size(); ++n)
    csv << n << "," << sol.annulus_counts[n] << "," << ldbar::g17(sol.annulus_norms[n]) << "\n";
  ldbar::write_text(out / "annulus_norms.csv", csv.str());
  manifest.add_artifact("annulus_norms.csv", "deck_sum_solver", "solve_leaf");

  manifest.figures()["pieces"] = sol.pieces;
  manifest.figures()["residual_rel"] = sol.residual_rel;
  manifest.figures()["tail_bound"] = sol.tail_bound;
  manifest.figures()["shell_ratio_fit"] = shell_ratio_fit(sol.annulus_norms, sol.annulus_counts);
  manifest.figures()["equivariance_defect"] = eq.defect_rel;
  manifest.figures()["data_identity_residual"] = eq.data_identity_residual;
  if (sol.residual_rel >= 0.05)
    manifest.fail("leaf residual " + ldbar::g17(sol.residual_rel) + " is not below 5%");
  else if (eq.defect_rel >= 0.05)
    manifest.fail("equivariance defect " + ldbar::g17(eq.defect_rel) + " is not below 5%");
  else if (eq.data_identity_residual > 1e-12)
    manifest.fail("orbit data identity residual " + ldbar::g17(eq.data_identity_residual));
  return finish(manifest, out);
}

int run_sweep(const RunConfig& cfg, const fs::path& out, Manifest& manifest) {
  const ldbar::DeckSolver solver(cfg.problem);

  std::ostringstream lcsv;
  lcsv << "delta,n,max_ratio\n";
  for (double d : cfg.sweep_deltas) {
    const std::vector<double> shells = solver.shell_lipschitz(cfg.t, cfg.t + d);
    for (std::size_t n = 0; n < shells.size(); ++n)
      lcsv << ldbar::g17(d) << "," << n << "," << ldbar::g17(shells[n]) << "\n";
  }
  ldbar::write_text(out / "sweep_lipschitz.csv", lcsv.str());
  manifest.add_artifact("sweep_lipschitz.csv", "deck_sum_solver", "transversal_lipschitz");

  const ldbar::DerivativeReport der = solver.derivative_fd(cfg.t, cfg.sweep_deltas);
  std::ostringstream dcsv;
  dcsv << "delta,defect\n";
  for (std::size_t i = 0; i < der.deltas.size(); ++i)
    dcsv << ldbar::g17(der.deltas[i]) << "," << ldbar::g17(der.defects[i]) << "\n";
  ldbar::write_text(out / "sweep_derivative.csv", dcsv.str());
  manifest.add_artifact("sweep_derivative.csv", "deck_sum_solver", "transversal_derivative_fd");

  const ldbar::ProblemSpec& p = cfg.problem;
  const auto form_at = [&p](double t) {
    GridField f = ldbar::make_grid_field(p.n_grid, p.h, ldbar::GridKind::form);
    const double a = p.bump_amplitude * (1.0 + p.modulation_depth * std::cos(t));
    ldbar::fill_grid(f, [&](Complex z) {
      const double q = std::norm(z) / (p.bump_radius * p.bump_radius);
      return q >= 1.0 ? 0.0 : a * std::pow(1.0 - q, 3.0);
    });
    return f;
  };
  const auto density_at = [&p](double) {
    return [&p](Complex z) { return ldbar::weight_density(p.weight, z); };
  };
  const ldbar::ContinuityReport cont = ldbar::family_continuity(
      form_at, density_at, cfg.t, cfg.sweep_offset, cfg.sweep_levels, p.degree);
  std::ostringstream ccsv;
  ccsv << "offset,modulus\n";
  for (std::size_t i = 0; i < cont.offsets.size(); ++i)
    ccsv << ldbar::g17(cont.offsets[i]) << "," << ldbar::g17(cont.modulus[i]) << "\n";
  ldbar::write_text(out / "sweep_continuity.csv", ccsv.str());
  manifest.add_artifact("sweep_continuity.csv", "metric_correction", "family_continuity");

  manifest.figures()["derivative_norm"] = der.derivative_norm;
  manifest.figures()["derivative_order_fit"] = der.fitted_order;
  manifest.figures()["continuity_lipschitz"] = cont.lipschitz;
  manifest.figures()["continuity_last_modulus"] = cont.modulus.back();
  const bool derivative_active = der.derivative_norm > 0.0;
  if (derivative_active && der.fitted_order < 1.5)
    manifest.fail("derivative defect order " + ldbar::g17(der.fitted_order) + " is below 1.5");
  else if (cont.modulus.back() > cont.modulus.front() + 1e-15)
    manifest.fail("modulus of continuity fails to shrink under offset refinement");
  return finish(manifest, out);
}

int run_constants(const RunConfig& cfg, const fs::path& out, Manifest& manifest) {
  const ldbar::DeckSolver solver(cfg.problem);
  const ldbar::ConstantsReport rep = solver.constants();
  OrderedJson j;
  j["c1"] = rep.c1;
  j["c2"] = rep.c2;
  j["c3"] = rep.c3;
  j["c4"] = rep.c4;
  j["k"] = rep.k;
  j["decay_rho"] = rep.decay_rho;
  j["tail_coefficient"] = rep.tail_coefficient;
  j["config_hash"] = manifest.hash();
  ldbar::write_text(out / "constants.json", j.dump(2) + "\n");
  manifest.add_artifact("constants.json", "deck_sum_solver", "measure_constants");
  manifest.figures()["c1"] = rep.c1;
  manifest.figures()["c2"] = rep.c2;
  manifest.figures()["c3"] = rep.c3;
  manifest.figures()["c4"] = rep.c4;
  manifest.figures()["k"] = rep.k;
  manifest.figures()["tail_coefficient"] = rep.tail_coefficient;
  if (!(rep.c1 > 0.0) || !(rep.c2 > 0.0) || !(rep.c3 > 0.0) || !(rep.c4 > 0.0) ||
      !(rep.tail_coefficient > 0.0))
    manifest.fail("constant chain contains a non-positive entry");
  return finish(manifest, out);
}

int run_report(const RunConfig& cfg, const fs::path& out, Manifest& manifest) {
  const ldbar::DeckSolver solver(cfg.problem);
  const ldbar::LeafSolution sol = solver.solve(cfg.t);
  const ldbar::ConstantsReport cons = solver.constants();
  const ldbar::DeckElement& gen = representative_element(solver.deck());

  std::ostringstream ncsv;
  ncsv << "n,count,norm\n";
  for (std::size_t n = 0; n < sol.annulus_norms.size(); ++n)
    ncsv << n << "," << sol.annulus_counts[n] << "," << ldbar::g17(sol.annulus_norms[n]) << "\n";
  ldbar::write_text(out / "annulus_norms.csv", ncsv.str());
  manifest.add_artifact("annulus_norms.csv", "deck_sum_solver", "solve_leaf");

  std::ostringstream dcsv;
  dcsv << "kind,parameter,value\n";
  for (int cap = 3; cap <= cfg.problem.max_annulus; ++cap) {
    const ldbar::EquivarianceReport eq = solver.equivariance(cfg.t, gen, cap);
    dcsv << "equivariance," << cap << "," << ldbar::g17(eq.defect_rel) << "\n";
  }
  const ldbar::DerivativeReport der = solver.derivative_fd(cfg.t, cfg.sweep_deltas);
  for (std::size_t i = 0; i < der.deltas.size(); ++i)
    dcsv << "derivative," << ldbar::g17(der.deltas[i]) << "," << ldbar::g17(der.defects[i]) << "\n";
  ldbar::write_text(out / "defects.csv", dcsv.str());
  manifest.add_artifact("defects.csv", "deck_sum_solver", "equivariance_check");

  OrderedJson rates;
  rates["shell_ratio_fit"] = shell_ratio_fit(sol.annulus_norms, sol.annulus_counts);
  rates["derivative_order_fit"] = der.fitted_order;
  rates["residual_rel"] = sol.residual_rel;
  rates["tail_bound"] = sol.tail_bound;
  rates["tail_coefficient"] = cons.tail_coefficient;
  rates["config_hash"] = manifest.hash();
  ldbar::write_text(out / "rates.json", rates.dump(2) + "\n");
  manifest.add_artifact("rates.json", "cli", "report");

  manifest.figures()["residual_rel"] = sol.residual_rel;
  manifest.figures()["shell_ratio_fit"] = rates["shell_ratio_fit"];
  manifest.figures()["derivative_order_fit"] = der.fitted_order;
  return finish(manifest, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weighted dbar solves on hyperbolic suspension laminations"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "ldbar-out";
  long long seed_override = -1;
  int threads = 1;
  app.add_option("--config", config_path, "configuration file (JSON)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed_override, "seed override")->check(CLI::NonNegativeNumber);
  app.add_option("--threads", threads, "worker threads (speed only; never affects results)")
      ->check(CLI::PositiveNumber);

  for (const char* name : {"lemmas", "partition", "group", "solve", "sweep", "constants", "report"})
    app.add_subcommand(name, "")->fallthrough();
  app.get_subcommand("lemmas")->description("sampled disk-automorphism inequality sweep");
  app.get_subcommand("partition")->description("partition-of-unity invariants per shell");
  app.get_subcommand("group")->description("deck enumeration, relation and counting checks");
  app.get_subcommand("solve")->description("truncated leaf solve with residual and equivariance");
  app.get_subcommand("sweep")->description("transversal Lipschitz, derivative and continuity sweeps");
  app.get_subcommand("constants")->description("measure the constant chain of the tail bound");
  app.get_subcommand("report")->description("render the CSV/JSON tables for a leaf");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "ldbar: " << e.what() << "\n";
    return 1;
  }

  try {
    std::string text;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw std::invalid_argument("config: cannot read " + config_path);
      std::ostringstream ss;
      ss << in.rdbuf();
      text = ss.str();
    }
    RunConfig cfg = ldbar::parse_config(text);
    if (seed_override >= 0) cfg.problem.seed = static_cast<std::uint64_t>(seed_override);
    const std::string command = app.get_subcommands().front()->get_name();
    ldbar::validate_config(cfg, command);

    const fs::path out(out_dir);
    fs::create_directories(out);
    Manifest manifest(command, cfg);

    if (command == "lemmas") return run_lemmas(cfg, out, manifest);
    if (command == "partition") return run_partition(cfg, out, manifest);
    if (command == "group") return run_group(cfg, out, manifest);
    if (command == "solve") return run_solve(cfg, out, manifest);
    if (command == "sweep") return run_sweep(cfg, out, manifest);
    if (command == "constants") return run_constants(cfg, out, manifest);
    if (command == "report") return run_report(cfg, out, manifest);
    std::cerr << "ldbar: unknown command\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "ldbar: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "ldbar: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "ldbar: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "ldbar: internal error: " << e.what() << "\n";
    return 3;
  }
}
