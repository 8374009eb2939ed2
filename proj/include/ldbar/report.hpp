#pragma once

/* Artifact emission: the grid-field text serialization, CSV tables, and the
 * run manifest that ties every artifact to (module, operation, config hash).
 * All numbers are printed with %.17g so reruns are byte-identical. */

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ldbar/config.hpp"
#include "ldbar/grid_field.hpp"

namespace ldbar {

inline std::string g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/* Self-describing text table: header lines, then side*side rows "re im" in
 * row-major ix order. */
inline void write_grid_field(const std::filesystem::path& path, const GridField& f) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("report: cannot open " + path.string());
  out << "ldbar-grid 1\n";
  out << "rho_max " << g17(f.rho_max) << "\n";
  out << "h " << g17(f.h) << "\n";
  out << "m " << f.m << "\n";
  out << "kind " << (f.kind == GridKind::section ? "section" : "form") << "\n";
  out << "side " << f.side() << "\n";
  for (int ix = 0; ix < f.side(); ++ix)
    for (int iy = 0; iy < f.side(); ++iy) {
      const Complex c = f.at(ix, iy);
      out << g17(c.real()) << " " << g17(c.imag()) << "\n";
    }
  if (!out) throw std::runtime_error("report: short write to " + path.string());
}

inline GridField read_grid_field(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("report: cannot open " + path.string());
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "ldbar-grid" || version != 1)
    throw std::runtime_error("report: " + path.string() + " is not a grid-field table");
  GridField f;
  std::string key, kind;
  int side = 0;
  in >> key >> f.rho_max >> key >> f.h >> key >> f.m >> key >> kind >> key >> side;
  f.kind = kind == "section" ? GridKind::section : GridKind::form;
  if (side != 2 * f.m || !(f.h > 0.0))
    throw std::runtime_error("report: inconsistent grid header in " + path.string());
  f.samples.assign(static_cast<std::size_t>(side) * side, Complex(0.0));
  for (int ix = 0; ix < side; ++ix)
    for (int iy = 0; iy < side; ++iy) {
      double re = 0.0, im = 0.0;
      in >> re >> im;
      f.at(ix, iy) = Complex(re, im);
    }
  if (!in) throw std::runtime_error("report: truncated grid table " + path.string());
  return f;
}

inline void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("report: cannot open " + path.string());
  out << body;
  if (!out) throw std::runtime_error("report: short write to " + path.string());
}

class Manifest {
 public:
  Manifest(std::string command, const RunConfig& cfg)
      : command_(std::move(command)), hash_(config_hash(cfg)), config_(canonical_config_json(cfg)) {}

  const std::string& hash() const { return hash_; }

  void add_artifact(const std::string& file, const std::string& module,
                    const std::string& operation) {
    artifacts_.push_back({{"file", file}, {"module", module}, {"operation", operation}});
  }

  OrderedJson& figures() { return figures_; }

  void fail(const std::string& why) { status_ = "check-failed: " + why; }
  bool ok() const { return status_ == "ok"; }
  const std::string& status() const { return status_; }

  void write(const std::filesystem::path& dir) const {
    OrderedJson j;
    j["command"] = command_;
    j["config_hash"] = hash_;
    j["status"] = status_;
    j["figures"] = figures_;
    j["artifacts"] = artifacts_;
    j["config"] = config_;
    write_text(dir / "manifest.json", j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::string hash_;
  OrderedJson config_;
  std::vector<OrderedJson> artifacts_;
  OrderedJson figures_ = OrderedJson::object();
  std::string status_ = "ok";
};

}  // namespace ldbar
