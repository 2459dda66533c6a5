#pragma once

// Plain-text and graymap exports. Every file starts with a provenance block
// naming the tool version and the config digest.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "stokes/core.hpp"
#include "stokes/diffraction.hpp"
#include "stokes/ensemble.hpp"
#include "stokes/metrology.hpp"
#include "stokes/units.hpp"
#include "stokes/witness.hpp"

namespace stokes {

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex_digest(std::string_view data) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(data)));
  return buf;
}

struct Provenance {
  std::string tool = "stokes-diffract";
  std::string version = kVersion;
  std::string config_digest;
  std::uint64_t seed = 0;

  std::string comment_block(std::string_view prefix = "# ") const {
    std::ostringstream os;
    os << prefix << tool << ' ' << version << '\n';
    os << prefix << "config " << config_digest << " seed " << seed << '\n';
    return os.str();
  }
};

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Tables

/// Minimal CSV builder; doubles use the shortest round-trip representation.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  CsvTable& meta(const std::string& key, const std::string& value) {
    meta_.push_back("# " + key + "=" + value);
    return *this;
  }

  template <class... Cells>
  void row(const Cells&... cells) {
    std::vector<std::string> r;
    (r.push_back(cell(cells)), ...);
    if (r.size() != columns_.size()) throw IoError("csv: row width does not match header");
    rows_.push_back(std::move(r));
  }

  std::string str(const Provenance& prov) const {
    std::ostringstream os;
    os << prov.comment_block();
    for (const auto& m : meta_) os << m << '\n';
    join(os, columns_);
    for (const auto& r : rows_) join(os, r);
    return os.str();
  }

  std::size_t size() const { return rows_.size(); }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(long long v) { return std::to_string(v); }
  static std::string cell(unsigned long v) { return std::to_string(v); }
  static std::string cell(unsigned long long v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  static std::string cell(const char* v) { return v; }
  static std::string cell(const std::string& v) { return v; }

  static void join(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  }

  std::vector<std::string> columns_;
  std::vector<std::string> meta_;
  std::vector<std::vector<std::string>> rows_;
};

inline CsvTable image_table(const DiffractionImage& img) {
  CsvTable t({"kx", "ky", "value"});
  t.meta("n_atoms", std::to_string(img.n_atoms))
      .meta("k0", format_quantity(img.k0, UnitKind::wavevector))
      .meta("dkx", format_quantity(img.grid.dkx(), UnitKind::wavevector))
      .meta("dky", format_quantity(img.grid.dky(), UnitKind::wavevector))
      .meta("nx", std::to_string(img.grid.nx))
      .meta("ny", std::to_string(img.grid.ny))
      .meta("theta_b", format_quantity(img.theta_b, UnitKind::angle))
      .meta("mode", image_mode_name(img.mode))
      .meta("clipped_pixels", std::to_string(img.clipped_pixels));
  for (int j = 0; j < img.grid.ny; ++j) {
    for (int i = 0; i < img.grid.nx; ++i) t.row(img.grid.kx(i), img.grid.ky(j), img.at(i, j));
  }
  return t;
}

inline CsvTable sum_rule_table(const StateSummary& s, const WitnessReport& r) {
  CsvTable t({"rule", "margin", "violated"});
  t.meta("n_atoms", std::to_string(s.n_atoms))
      .meta("ns_mean", format_double(s.ns_mean))
      .meta("ns_var", format_double(s.ns_var))
      .meta("pair_sum", format_double(s.pair_sum))
      .meta("verdict", verdict_name(r.verdict));
  t.row("2a", r.margin_a, r.violated_a);
  t.row("2b", r.margin_b, r.violated_b);
  t.row("2c", r.margin_c, r.violated_c);
  t.row("vanishing-uncertainty-feature", 0.0, r.qualitative.vanishing_uncertainty_feature);
  t.row("maximum-uncertainty-dip", 0.0, r.qualitative.maximum_uncertainty_dip);
  t.row("half-excitation-threshold", 0.0, r.qualitative.half_excitation_threshold);
  return t;
}

inline CsvTable phase_diagram_table(int n_atoms, double ns_mean, const std::vector<PhaseCell>& cells) {
  CsvTable t({"ns_var", "pair_sum", "violated_a", "violated_b", "violated_c", "label"});
  t.meta("n_atoms", std::to_string(n_atoms)).meta("ns_mean", format_double(ns_mean));
  for (const auto& c : cells) {
    t.row(c.ns_var, c.pair_sum, c.violated_a, c.violated_b, c.violated_c, phase_label_name(c.label));
  }
  return t;
}

inline CsvTable dicke_map_table(int n_atoms, const std::vector<DickeStrength>& cells) {
  CsvTable t({"j", "m", "pair_sum", "feature"});
  t.meta("n_atoms", std::to_string(n_atoms));
  for (const auto& c : cells) t.row(c.j, c.m, c.pair_sum, feature_name(c.feature));
  return t;
}

inline CsvTable sweep_table(const SweepResult& r) {
  CsvTable t({"n_atoms", "trials", "mean_estimate", "std_estimate", "peak_strength", "photons_per_trial",
              "reference"});
  t.meta("mode", probe_mode_name(r.mode))
      .meta("slope", format_double(r.slope))
      .meta("slope_stderr", format_double(r.slope_stderr));
  for (const auto& row : r.rows) {
    t.row(row.n_atoms, row.trials, row.mean_estimate, row.std_estimate, row.peak_strength, row.photons_per_trial,
          row.reference);
  }
  return t;
}

inline CsvTable thermometry_table(const ThermometryCurve& c) {
  CsvTable t({"tau1", "peak_strength"});
  t.meta("model", motion_model_name(c.model))
      .meta("dims", std::to_string(c.dims))
      .meta("fitted_temperature", format_quantity(c.fitted_temperature, UnitKind::temperature))
      .meta("fitted_msd_coefficient", format_double(c.fitted_msd_coefficient) + " m^2/s^2")
      .meta("fit_intercept", format_double(c.fit_intercept))
      .meta("fit_rms_residual", format_double(c.fit_rms_residual));
  for (std::size_t i = 0; i < c.tau1_grid.size(); ++i) t.row(c.tau1_grid[i], c.peak_strengths[i]);
  return t;
}

inline CsvTable time_ratio_table(const std::vector<TimeRatio>& series) {
  CsvTable t({"tau_c", "ratio"});
  for (const auto& p : series) t.row(p.tau_c, p.ratio);
  return t;
}

// ---------------------------------------------------------------------------
// Portable graymap

enum class ToneMap { linear, log };

/// Binary P5 graymap, 8 or 16 bits (16-bit samples big-endian). Row 0 is the
/// largest k_y so the image reads with k_y increasing upward.
inline std::string pgm_bytes(const DiffractionImage& img, int depth, ToneMap tone, const Provenance& prov) {
  if (depth != 8 && depth != 16) throw IoError("pgm: depth must be 8 or 16");
  const int maxval = depth == 8 ? 255 : 65535;
  double vmax = 0.0;
  for (double v : img.values) vmax = std::max(vmax, v);
  const double ref = std::max(vmax * 1e-4, 1e-300);
  auto map = [&](double v) {
    if (!(vmax > 0.0)) return 0;
    v = std::max(0.0, v);
    const double x = tone == ToneMap::linear ? v / vmax : std::log1p(v / ref) / std::log1p(vmax / ref);
    return static_cast<int>(std::lround(std::clamp(x, 0.0, 1.0) * maxval));
  };
  std::ostringstream os;
  os << "P5\n" << prov.comment_block("# ");
  os << "# mode " << image_mode_name(img.mode) << " tone " << (tone == ToneMap::linear ? "linear" : "log")
     << " max " << format_double(vmax) << '\n';
  os << img.grid.nx << ' ' << img.grid.ny << '\n' << maxval << '\n';
  for (int j = img.grid.ny - 1; j >= 0; --j) {
    for (int i = 0; i < img.grid.nx; ++i) {
      const int g = map(img.at(i, j));
      if (depth == 8) {
        os.put(static_cast<char>(g));
      } else {
        os.put(static_cast<char>((g >> 8) & 0xff));
        os.put(static_cast<char>(g & 0xff));
      }
    }
  }
  return os.str();
}

}  // namespace stokes
