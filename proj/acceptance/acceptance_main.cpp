/* Release gate: nine checks, one pass/fail line each.  Run with no arguments
 * for the full battery or with a single index (1..9) for one check; the exit
 * code is the number of failures. */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ldbar/config.hpp"
#include "ldbar/correction.hpp"
#include "ldbar/deck.hpp"
#include "ldbar/disk_geometry.hpp"
#include "ldbar/fuchsian.hpp"
#include "ldbar/partition.hpp"
#include "ldbar/report.hpp"
#include "ldbar/solver.hpp"

using ldbar::Complex;
using ldbar::GridField;

namespace {

namespace fs = std::filesystem;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

bool emit(int id, const char* name, bool pass, const std::string& detail, double secs) {
  std::printf("%s  criterion %d: %s (%s, %.1f s)\n", pass ? "PASS" : "FAIL", id, name,
              detail.c_str(), secs);
  std::fflush(stdout);
  return pass;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

Complex cubic_bump(Complex z, Complex a, double R) {
  const double q = std::norm(z - a) / (R * R);
  return q < 1.0 ? std::pow(1.0 - q, 3) : 0.0;
}
Complex cubic_bump_dbar(Complex z, Complex a, double R) {
  const double q = std::norm(z - a) / (R * R);
  if (q >= 1.0) return 0.0;
  return -(3.0 / (R * R)) * std::pow(1.0 - q, 2) * (z - a);
}

// log-linear decay ratio across the occupied shells from 3 on
double fitted_shell_ratio(const std::vector<double>& norms,
                          const std::vector<long long>& counts) {
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
  if (np < 2) return 1.0;
  return std::exp((np * sxy - sx * sy) / (np * sxx - sx * sx));
}

// --- 1: sampled automorphism inequalities ------------------------------------

bool criterion1() {
  Timer tm;
  const ldbar::DiskLemmaReport rep = ldbar::verify_disk_lemmas(100000, 1, 8);
  const double secs = tm.elapsed();
  const bool pass = rep.violations == 0 && secs < 30.0;
  return emit(1, "sampled disk inequalities hold with 1e-12 slack", pass,
              fmt("violations %lld of %lld samples", rep.violations, rep.samples), secs);
}

// --- 2: partition invariants -------------------------------------------------

bool criterion2() {
  Timer tm;
  double worst_sum = 0.0, glo = 1e300, ghi = 0.0;
  int worst_overlap = 0;
  for (int n = 0; n <= 8; ++n) {
    const ldbar::PartitionSweep sw = ldbar::partition_invariant_sweep(n, 10000, 1000 + n);
    worst_sum = std::max(worst_sum, sw.max_sum_defect);
    worst_overlap = std::max(worst_overlap, sw.max_overlap);
    const double g = ldbar::measured_gradient_sup(n, 30) / std::ldexp(1.0, n);
    glo = std::min(glo, g);
    ghi = std::max(ghi, g);
  }
  const ldbar::PartitionSpec pspec = ldbar::make_partition_spec();
  double alpha = 0.0, chi = 0.0;
  for (int n : {0, 2, 4, 6, 8}) {
    const ldbar::RectangleIndex idx{16, 0, n};
    const ldbar::ComposedNorms cn =
        ldbar::composed_regularity_check(idx, ldbar::rectangle_transform(idx));
    alpha = std::max(alpha, cn.alpha_c1);
    chi = std::max(chi, cn.chi_c1);
  }
  const double secs = tm.elapsed();
  const bool pass = worst_sum <= 1e-10 && worst_overlap <= 4 && ghi / glo <= 4.0 &&
                    alpha <= 8.0 * pspec.c1_bound && chi <= 25.0 && secs < 60.0;
  return emit(2, "partition sums, overlap, gradient scaling, pullback norms", pass,
              fmt("sum defect %.2e, overlap %d, gradient band %.2f, alpha C1 %.1f, chi C1 %.1f",
                  worst_sum, worst_overlap, ghi / glo, alpha, chi),
              secs);
}

// --- 3: group structure ------------------------------------------------------

bool criterion3() {
  Timer tm;
  const ldbar::SurfaceGroup g = ldbar::octagon_surface_group();
  const std::vector<int> relation(g.relation.begin(), g.relation.end());
  const double rel = ldbar::identity_residual(ldbar::word_transform(g, relation));
  const ldbar::DeckEnumeration deck = ldbar::enumerate_deck(g, 12, 8);
  const double cosh_defect =
      std::abs(std::cosh(ldbar::measured_orbit_separation(deck)) - (1.0 + std::sqrt(2.0)));
  double cmin = 1e300, cmax = 0.0;
  for (int n = 3; n <= 8; ++n) {
    if (deck.shell_counts[n] == 0) continue;  // the length spectrum leaves 4 empty
    const double r = deck.shell_counts[n] / std::ldexp(1.0, n);
    cmin = std::min(cmin, r);
    cmax = std::max(cmax, r);
  }
  const double secs = tm.elapsed();
  const bool pass = rel < 1e-10 && cosh_defect < 1e-12 && cmax / cmin <= 4.0 && secs < 120.0;
  return emit(3, "octagon relation, apothem, shell counting band", pass,
              fmt("relation %.1e, cosh defect %.1e, count band %.2f", rel, cosh_defect,
                  cmax / cmin),
              secs);
}

// --- 4: minimal solver against the analytic-difference oracle ----------------

bool criterion4() {
  Timer tm;
  const ldbar::WeightSpec w = ldbar::make_weight_spec(6, 5);
  ldbar::Rng rng(404);
  double worst_match = 0.0, worst_min = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Complex a = rng.disk_point(0.5);
    const double R = rng.uniform(0.15, 0.3);
    const Complex amp = std::polar(rng.uniform(0.5, 2.0), rng.uniform(0.0, 6.28));

    GridField v = ldbar::make_grid_field(6, 1.0 / 256.0, ldbar::GridKind::form);
    ldbar::fill_grid(v, [&](Complex z) { return amp * cubic_bump_dbar(z, a, R); });
    const ldbar::SolveReport rep = ldbar::minimal_solution_report(v, w, 24);

    GridField oracle = ldbar::make_grid_field(6, 1.0 / 256.0, ldbar::GridKind::section);
    ldbar::fill_grid(oracle, [&](Complex z) { return amp * cubic_bump(z, a, R); });
    const ldbar::BergmanProjection p = ldbar::bergman_project(oracle, w, 24);
    double dd = 0.0, on = 0.0;
    for (std::size_t i = 0; i < oracle.samples.size(); ++i)
      oracle.samples[i] -= p.field.samples[i];
    GridField diff = rep.u;
    for (std::size_t i = 0; i < diff.samples.size(); ++i)
      diff.samples[i] -= oracle.samples[i];
    dd = ldbar::weighted_norm_sq(diff, w);
    on = ldbar::weighted_norm_sq(oracle, w);
    worst_match = std::max(worst_match, std::sqrt(dd / on));
    worst_min = std::max(worst_min, rep.minimality_defect);
  }

  // residual refinement: halving h must cut the defect at first order
  const Complex a(0.1, 0.05);
  const double R = 0.25;
  const auto residual_at = [&](int n_grid, double h) {
    GridField v = ldbar::make_grid_field(n_grid, h, ldbar::GridKind::form);
    ldbar::fill_grid(v, [&](Complex z) { return cubic_bump_dbar(z, a, R); });
    const GridField u = ldbar::minimal_solution(v, w, 24);
    const GridField r = ldbar::dbar_forward(u);
    GridField diff = v;
    for (std::size_t i = 0; i < diff.samples.size(); ++i)
      diff.samples[i] = r.samples[i] - v.samples[i];
    return std::sqrt(ldbar::l2_norm_sq(diff, 0.45) / ldbar::l2_norm_sq(v, 0.45));
  };
  const double halving = residual_at(5, 1.0 / 128.0) / residual_at(6, 1.0 / 256.0);

  const double secs = tm.elapsed();
  const bool pass = worst_match < 0.01 && worst_min < 1e-10 && halving > 1.4 &&
                    halving < 2.6 && secs < 300.0;
  return emit(4, "minimal solutions match F - P(F) on seeded bumps", pass,
              fmt("worst match %.4f, minimality %.1e, halving ratio %.2f", worst_match,
                  worst_min, halving),
              secs);
}

// --- 5: correction machinery -------------------------------------------------

bool criterion5() {
  Timer tm;
  const ldbar::WeightSpec w = ldbar::make_weight_spec(6, 5);

  GridField u = ldbar::make_grid_field(7, 1.0 / 128.0, ldbar::GridKind::section);
  ldbar::fill_grid(u, [](Complex) { return Complex(1.0); });
  const ldbar::CorrectionReport r3 = ldbar::correction_solve(u, 3, w);
  const ldbar::CorrectionReport r5 = ldbar::correction_solve(u, 5, w);
  const double c1_band = std::max(r3.c1, r5.c1) / std::min(r3.c1, r5.c1);

  GridField v9 = ldbar::make_grid_field(9, 1.0 / 128.0, ldbar::GridKind::form);
  ldbar::fill_grid(v9, [](Complex z) { return cubic_bump_dbar(z, Complex(0.30, 0.05), 0.12); });
  for (ldbar::Complex& s : v9.samples) s = Complex(0.0);
  ldbar::fill_grid(v9, [](Complex z) { return cubic_bump(z, Complex(0.30, 0.05), 0.12); });
  const double g5 = ldbar::restricted_vs_global(v9, 5, w, 16).solution_gap;
  const double g6 = ldbar::restricted_vs_global(v9, 6, w, 16).solution_gap;
  const double g8 = ldbar::restricted_vs_global(v9, 8, w, 16).solution_gap;

  GridField v5 = ldbar::make_grid_field(5, 1.0 / 64.0, ldbar::GridKind::form);
  ldbar::fill_grid(v5, [](Complex z) { return cubic_bump(z, Complex(0.20, 0.10), 0.25); });
  const auto pert = [](Complex z) { return z.real(); };
  const std::vector<double> deltas{0.2, 0.0632, 0.02, 0.00632, 0.002};
  std::vector<double> diffs;
  for (double d : deltas)
    diffs.push_back(ldbar::metric_perturbation(v5, v5, w, pert, d, 12).solution_diff);
  const double slope = std::log(diffs.front() / diffs.back()) /
                       std::log(deltas.front() / deltas.back());

  const auto form_at = [&](double t) {
    GridField v = ldbar::make_grid_field(5, 1.0 / 64.0, ldbar::GridKind::form);
    ldbar::fill_grid(v, [&](Complex z) {
      return (1.0 + 0.5 * t) * cubic_bump(z, Complex(0.20, 0.10), 0.25);
    });
    return v;
  };
  const auto density_at = [&](double t) {
    return [&w, t](Complex c) { return ldbar::weight_density(w, c) * (1.0 + 0.3 * t * c.real()); };
  };
  const ldbar::ContinuityReport cont =
      ldbar::family_continuity(form_at, density_at, 0.3, 0.2, 4, 12);
  bool shrinking = cont.modulus.back() <= 0.25 * cont.modulus.front();
  for (std::size_t i = 1; i < cont.modulus.size(); ++i)
    shrinking = shrinking && cont.modulus[i] <= cont.modulus[i - 1] * (1.0 + 1e-9);

  const double secs = tm.elapsed();
  const bool pass = c1_band <= 4.0 && g6 < g5 && g8 < g6 && slope >= 0.9 && shrinking &&
                    secs < 300.0;
  return emit(5, "correction constants, truncation comparison, parameter sweeps", pass,
              fmt("c1 band %.2f, gaps %.1e>%.1e>%.1e, exponent %.2f, modulus %.1e->%.1e",
                  c1_band, g5, g6, g8, slope, cont.modulus.front(), cont.modulus.back()),
              secs);
}

// --- 6: per-annulus decay over the seeded instance set -----------------------

bool criterion6() {
  Timer tm;
  ldbar::Rng draws(2026);
  double worst_rho = 0.0, worst_tail_margin = 0.0;
  for (int i = 0; i < 20; ++i) {
    ldbar::ProblemSpec spec;  // library default grid h = 1/64 keeps this tractable
    spec.seed = 100 + i;
    spec.bump_radius = draws.uniform(0.15, 0.22);
    spec.bump_amplitude = draws.uniform(0.5, 2.0);
    spec.modulation_depth = draws.uniform(0.0, 0.8);
    const double t = draws.uniform(0.0, 2.0 * std::numbers::pi);

    const ldbar::DeckSolver solver(spec);
    const ldbar::LeafSolution sol = solver.solve(t);
    worst_rho = std::max(worst_rho, fitted_shell_ratio(sol.annulus_norms, sol.annulus_counts));

    const double measured_tail = sol.annulus_norms[7] + sol.annulus_norms[8];
    const double predicted = ldbar::predicted_tail(solver.constants(), 6);
    worst_tail_margin = std::max(worst_tail_margin, measured_tail / predicted);
  }
  const double secs = tm.elapsed();
  const bool pass = worst_rho <= 0.85 && worst_tail_margin <= 1.0 && secs < 600.0;
  return emit(6, "shell decay ratio and tail domination on 20 seeded instances", pass,
              fmt("worst fitted ratio %.3f, worst measured/predicted tail %.1e", worst_rho,
                  worst_tail_margin),
              secs);
}

// --- 7: production solve -----------------------------------------------------

bool criterion7() {
  Timer tm;
  ldbar::ProblemSpec spec;
  spec.h = 1.0 / 256.0;  // production grid, full truncation depth
  const ldbar::DeckSolver solver(spec);
  const ldbar::LeafSolution sol = solver.solve(0.7);

  const ldbar::DeckElement* gen = nullptr;
  for (const auto& e : solver.deck().elements)
    if (e.n == 3) {
      gen = &e;
      break;
    }
  std::vector<double> defects;
  bool monotone = true;
  for (int cap = 3; cap <= spec.max_annulus; ++cap) {
    defects.push_back(solver.equivariance(0.7, *gen, cap).defect_rel);
    if (defects.size() > 1 && defects.back() > defects[defects.size() - 2] + 1e-12)
      monotone = false;
  }
  const double secs = tm.elapsed();
  const bool pass =
      sol.residual_rel < 0.05 && defects.back() < 0.05 && monotone && secs < 600.0;
  return emit(7, "leaf residual and equivariance at full depth", pass,
              fmt("residual %.2e, defect %.2e -> %.2e over caps 3..%d, monotone %s",
                  sol.residual_rel, defects.front(), defects.back(), spec.max_annulus,
                  monotone ? "yes" : "no"),
              secs);
}

// --- 8: transversal regularity ----------------------------------------------

bool criterion8() {
  Timer tm;
  ldbar::ProblemSpec spec;
  spec.h = 1.0 / 256.0;
  const ldbar::DeckSolver solver(spec);
  const double t = 0.7;

  const auto total = [&](double d) {
    const std::vector<double> sl = solver.shell_lipschitz(t, t + d);
    double acc = 0.0;
    for (double v : sl) acc += v;
    return acc;
  };
  const double t1 = total(1e-2), t2 = total(3e-3), t3 = total(1e-3);
  const double spread = std::max({t1, t2, t3}) / std::min({t1, t2, t3});

  const ldbar::DerivativeReport der = solver.derivative_fd(t, {0.4, 0.2, 0.1, 0.05});

  const double secs = tm.elapsed();
  const bool pass = spread <= 1.05 && der.fitted_order >= 1.5 && secs < 600.0;
  return emit(8, "Lipschitz total stable under refinement, derivative order", pass,
              fmt("total spread %.4f, fitted order %.2f", spread, der.fitted_order), secs);
}

// --- 9: determinism across thread counts -------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool criterion9(const fs::path& exe_dir) {
  Timer tm;
  const fs::path cli = exe_dir / "ldbar";
  const fs::path base = fs::temp_directory_path() / "ldbar-acceptance-determinism";
  fs::remove_all(base);
  fs::create_directories(base);

  bool pass = true;
  std::string detail;
  for (const char* cmd : {"solve", "constants"}) {
    const fs::path a = base / (std::string(cmd) + "-a"), b = base / (std::string(cmd) + "-b");
    const std::string run_a =
        "\"" + cli.string() + "\" " + cmd + " --out \"" + a.string() + "\" --threads 1";
    const std::string run_b =
        "\"" + cli.string() + "\" " + cmd + " --out \"" + b.string() + "\" --threads 3";
    if (std::system(run_a.c_str()) != 0 || std::system(run_b.c_str()) != 0) {
      pass = false;
      detail = std::string(cmd) + " run failed";
      break;
    }
    for (const auto& entry : fs::directory_iterator(a)) {
      const fs::path other = b / entry.path().filename();
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
        pass = false;
        detail = std::string(cmd) + "/" + entry.path().filename().string() + " differs";
      }
    }
    if (!pass) break;
  }
  if (pass) detail = "solve and constants artifacts byte-identical for 1 vs 3 threads";
  return emit(9, "artifacts independent of thread count", pass, detail, tm.elapsed());
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path exe_dir = fs::absolute(fs::path(argv[0])).parent_path();
  int which = 0;
  if (argc > 1) {
    which = std::atoi(argv[1]);
    if (which < 1 || which > 9) {
      std::fprintf(stderr, "usage: %s [1..9]\n", argv[0]);
      return 64;
    }
  }
  int failures = 0;
  const auto run = [&](int id, bool ok) {
    if (which == 0 || which == id) failures += ok ? 0 : 1;
  };
  if (which == 0 || which == 1) run(1, criterion1());
  if (which == 0 || which == 2) run(2, criterion2());
  if (which == 0 || which == 3) run(3, criterion3());
  if (which == 0 || which == 4) run(4, criterion4());
  if (which == 0 || which == 5) run(5, criterion5());
  if (which == 0 || which == 6) run(6, criterion6());
  if (which == 0 || which == 7) run(7, criterion7());
  if (which == 0 || which == 8) run(8, criterion8());
  if (which == 0 || which == 9) run(9, criterion9(exe_dir));
  return failures;
}
