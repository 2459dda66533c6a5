#pragma once

// Subcommands of the stokes-diffract tool. Each one reads a RunConfig,
// writes its artifacts under output.dir and returns a process exit code.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stokes/cli/config.hpp"
#include "stokes/core.hpp"
#include "stokes/diffraction.hpp"
#include "stokes/ensemble.hpp"
#include "stokes/io.hpp"
#include "stokes/metrology.hpp"
#include "stokes/oracle_check.hpp"
#include "stokes/rng.hpp"
#include "stokes/spin_states.hpp"
#include "stokes/units.hpp"
#include "stokes/witness.hpp"

namespace stokes::cli {

inline const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = {"diffract", "witness", "gradiometer",
                                                 "thermometry", "oracle-check", "sweep"};
  return names;
}

// ---------------------------------------------------------------------------
// Building blocks from the config

inline std::uint64_t root_seed(const RunConfig& cfg) { return static_cast<std::uint64_t>(cfg.integer("seed")); }

inline double wavevector(const RunConfig& cfg) { return 2.0 * kPi / cfg.number("laser.wavelength"); }

inline StateSummary build_summary(const RunConfig& cfg) {
  const int n = static_cast<int>(cfg.integer("state.n_atoms"));
  const std::string kind = cfg.text("state.kind");
  StateSummary s;
  if (kind == "coherent") {
    s = coherent_summary(n, cfg.number("state.polar"), cfg.number("state.azimuth"));
  } else if (kind == "dicke") {
    for (const char* k : {"state.j", "state.m"}) {
      if (!cfg.has(k)) throw ConfigError(k, "required for state.kind = dicke");
    }
    s = dicke_summary(n, cfg.number("state.j"), cfg.number("state.m"));
  } else {
    for (const char* k : {"state.ns_mean", "state.ns_var"}) {
      if (!cfg.has(k)) throw ConfigError(k, "required for state.kind = summary");
    }
    const bool has_p = cfg.has("state.pair_sum"), has_r = cfg.has("state.ratio");
    if (has_p == has_r) {
      throw ConfigError("state.pair_sum", "give exactly one of state.pair_sum or state.ratio",
                        cfg.line(has_p ? "state.pair_sum" : "state.ns_mean"));
    }
    const double ns = cfg.number("state.ns_mean");
    const double p = has_p ? cfg.number("state.pair_sum") : ratio_to_pair_sum(cfg.number("state.ratio"), ns, n);
    s = StateSummary{n, ns, cfg.number("state.ns_var"), p};
    if (const auto why = s.bound_violation(); !why.empty()) {
      throw ConfigError("state", "summary is not physical: " + why);
    }
  }
  return apply_homogeneous_dephasing(s, cfg.number("state.dephasing_rate"), cfg.number("state.dephasing_time"));
}

inline Geometry build_geometry(const RunConfig& cfg) {
  const std::string kind = cfg.text("geometry.kind");
  if (kind == "gaussian2d") return Gaussian2D{cfg.number("geometry.fwhm")};
  if (kind == "gaussian1d") return Gaussian1D{cfg.number("geometry.fwhm")};
  if (kind == "slab") return Slab{cfg.number("geometry.width"), cfg.number("geometry.height")};
  const auto dims = cfg.integer("geometry.dims");
  if (dims < 1 || dims > 3) throw ConfigError("geometry.dims", "must be 1, 2 or 3", cfg.line("geometry.dims"));
  return Lattice{cfg.number("geometry.spacing"), static_cast<int>(dims)};
}

inline LaserConfig build_laser(const RunConfig& cfg) {
  return {cfg.number("laser.rabi_frequency"), cfg.number("laser.detuning"), cfg.number("laser.linewidth"),
          wavevector(cfg)};
}

inline PatternOptions build_pattern_options(const RunConfig& cfg) {
  PatternOptions opt;
  opt.model = cfg.text("grid.model") == "ensemble_average" ? StructureModel::ensemble_average
                                                            : StructureModel::fixed_positions;
  opt.envelope = cfg.text("grid.envelope") == "dipole" ? Envelope::dipole : Envelope::identity;
  opt.threads = static_cast<unsigned>(cfg.integer("threads"));
  return opt;
}

inline BackgroundEstimator build_estimator(const RunConfig& cfg) {
  return cfg.text("grid.background") == "point" ? BackgroundEstimator::point : BackgroundEstimator::ring;
}

/// Square (or, for 1D ensembles, line) grid centred on the forward direction.
inline GridSpec build_grid(const RunConfig& cfg, const EnsemblePositions& pos) {
  const double theta = cfg.number("grid.half_angle") > 0.0 ? cfg.number("grid.half_angle")
                                                           : 2.0 * boundary_angle(pos);
  if (theta >= kPi / 2.0) throw ConfigError("grid.half_angle", "must be below 90 deg", cfg.line("grid.half_angle"));
  const double kmax = pos.k0 * std::sin(theta);
  const int n = static_cast<int>(cfg.integer("grid.pixels"));
  if (n < 3) throw ConfigError("grid.pixels", "need at least 3 pixels", cfg.line("grid.pixels"));
  return dimensionality(pos.geometry) == 1 ? GridSpec::line(-kmax, kmax, n) : GridSpec::square(kmax, n);
}

inline EnsemblePositions build_positions(const RunConfig& cfg, int n_atoms, std::uint64_t sample = 0) {
  return sample_positions(build_geometry(cfg), n_atoms, derive_seed(root_seed(cfg), streams::positions, sample),
                          wavevector(cfg));
}

// ---------------------------------------------------------------------------
// Output

class Outputs {
 public:
  Outputs(const RunConfig& cfg, const std::string& subcommand) : dir_(cfg.text("output.dir")) {
    prefix_ = cfg.text("output.prefix").empty() ? subcommand : cfg.text("output.prefix");
    format_ = cfg.text("output.format");
    depth_ = cfg.text("output.pgm_depth") == "8" ? 8 : 16;
    tone_ = cfg.text("output.tone") == "log" ? ToneMap::log : ToneMap::linear;
    prov_.config_digest = cfg.digest();
    prov_.seed = root_seed(cfg);
    config_text_ = cfg.serialize();
  }

  const Provenance& provenance() const { return prov_; }

  std::filesystem::path path(const std::string& name, const std::string& ext) const {
    return dir_ / (prefix_ + "_" + name + ext);
  }

  void table(const std::string& name, const CsvTable& t) {
    write(path(name, ".csv"), t.str(prov_));
  }

  void image(const std::string& name, const DiffractionImage& img) {
    if (format_ == "csv" || format_ == "both") write(path(name, ".csv"), image_table(img).str(prov_));
    if (format_ == "pgm" || format_ == "both") write(path(name, ".pgm"), pgm_bytes(img, depth_, tone_, prov_));
  }

  /// The run report: provenance, the canonical config, then the results.
  std::string report(const std::string& body) {
    std::ostringstream os;
    os << prov_.comment_block();
    os << "# config\n";
    std::istringstream cfg(config_text_);
    for (std::string line; std::getline(cfg, line);) os << "#   " << line << '\n';
    os << body;
    const std::string text = os.str();
    write(path("report", ".txt"), text);
    return text;
  }

  const std::vector<std::string>& written() const { return written_; }

 private:
  void write(const std::filesystem::path& p, const std::string& content) {
    write_text(p, content);
    written_.push_back(p.string());
  }

  std::filesystem::path dir_;
  std::string prefix_;
  std::string format_;
  int depth_ = 16;
  ToneMap tone_ = ToneMap::linear;
  Provenance prov_;
  std::string config_text_;
  std::vector<std::string> written_;
};

class ReportBody {
 public:
  ReportBody& kv(const std::string& key, const std::string& value) {
    os_ << key << ": " << value << '\n';
    return *this;
  }
  ReportBody& kv(const std::string& key, double value) { return kv(key, format_double(value)); }
  ReportBody& kv(const std::string& key, long long value) { return kv(key, std::to_string(value)); }
  ReportBody& kv(const std::string& key, int value) { return kv(key, std::to_string(value)); }
  ReportBody& warn(const Warnings& w) {
    for (const auto& s : w) os_ << "warning: " << s << '\n';
    return *this;
  }
  ReportBody& line(const std::string& s) {
    os_ << s << '\n';
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

// ---------------------------------------------------------------------------
// Ratio evaluation shared by diffract and sweep

struct RatioStats {
  double mean = 0.0;
  double stddev = 0.0;
  int samples = 0;
};

inline RatioStats averaged_ratio(const RunConfig& cfg, const StateSummary& s) {
  const int samples = static_cast<int>(cfg.integer("geometry.samples"));
  const auto opt = build_pattern_options(cfg);
  const auto est = build_estimator(cfg);
  const int ring = static_cast<int>(cfg.integer("grid.ring_samples"));
  std::vector<double> r(samples);
  for (int i = 0; i < samples; ++i) {
    const auto pos = build_positions(cfg, s.n_atoms, static_cast<std::uint64_t>(i));
    r[i] = pattern_ratio(s, pos, {}, boundary_angle(pos), est, ring, opt).ratio;
  }
  RatioStats out;
  out.samples = samples;
  for (double v : r) out.mean += v / samples;
  if (samples > 1) {
    double ss = 0.0;
    for (double v : r) ss += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(ss / (samples - 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

inline std::string run_diffract(const RunConfig& cfg) {
  Outputs out(cfg, "diffract");
  ReportBody body;
  const auto s = build_summary(cfg);
  const auto laser = build_laser(cfg);
  body.warn(laser.validate());
  const auto pos = build_positions(cfg, s.n_atoms, 0);
  body.warn(dilute_warnings(pos));
  const auto opt = build_pattern_options(cfg);
  const auto grid = build_grid(cfg, pos);
  const double theta_b = boundary_angle(pos);

  const auto img = collective_pattern(s, pos, {}, grid, opt);
  out.image("image", img);
  const auto stats = averaged_ratio(cfg, s);

  body.kv("n_atoms", s.n_atoms)
      .kv("ns_mean", s.ns_mean)
      .kv("ns_var", s.ns_var)
      .kv("pair_sum", s.pair_sum)
      .kv("geometry", geometry_name(pos.geometry))
      .kv("k0", format_quantity(pos.k0, UnitKind::wavevector))
      .kv("theta_b", format_quantity(theta_b, UnitKind::angle))
      .kv("ratio", stats.mean)
      .kv("ratio_std", stats.stddev)
      .kv("ratio_samples", stats.samples)
      .kv("readout_ratio", readout_ratio(s))
      .kv("zero_background_ratio", zero_background_ratio(s));
  try {
    const auto r = peak_dip_ratio(img, theta_b, build_estimator(cfg), static_cast<int>(cfg.integer("grid.ring_samples")));
    body.kv("image_ratio", r.ratio);
  } catch (const DomainError& e) {
    body.kv("image_ratio", std::string("n/a (") + e.what() + ")");
  }
  body.kv("clipped_pixels", static_cast<long long>(img.clipped_pixels));

  const auto photons = cfg.integer("diffract.photons");
  if (photons > 0) {
    const auto counts = photon_counts(img, photons, derive_seed(root_seed(cfg), streams::photons));
    out.image("counts", counts);
    body.kv("photons", photons);
  }
  const auto& times = cfg.numbers("diffract.collection_times");
  if (!times.empty()) {
    const double gamma = cfg.number("diffract.decay_rate") > 0.0 ? cfg.number("diffract.decay_rate")
                                                                 : effective_scattering_rate(laser);
    const auto series = time_resolved_ratio(s, pos, gamma, times, build_estimator(cfg),
                                            static_cast<int>(cfg.integer("grid.ring_samples")), {}, opt);
    out.table("time_ratio", time_ratio_table(series));
    body.kv("decay_rate", format_quantity(gamma, UnitKind::rate));
  }
  return out.report(body.str());
}

inline std::string run_witness(const RunConfig& cfg) {
  Outputs out(cfg, "witness");
  ReportBody body;
  const auto s = build_summary(cfg);
  const auto r = evaluate_sum_rules(s);
  body.kv("n_atoms", s.n_atoms).kv("ns_mean", s.ns_mean).kv("ns_var", s.ns_var).kv("pair_sum", s.pair_sum);
  body.kv("margin_2a", r.margin_a).kv("violated_2a", r.violated_a ? "yes" : "no");
  body.kv("margin_2b", r.margin_b).kv("violated_2b", r.violated_b ? "yes" : "no");
  body.kv("margin_2c", r.margin_c).kv("violated_2c", r.violated_c ? "yes" : "no");
  body.kv("vanishing_uncertainty_feature", r.qualitative.vanishing_uncertainty_feature ? "yes" : "no");
  body.kv("maximum_uncertainty_dip", r.qualitative.maximum_uncertainty_dip ? "yes" : "no");
  body.kv("half_excitation_threshold", r.qualitative.half_excitation_threshold ? "yes" : "no");
  if (s.n_atoms >= 2) {
    const auto th = half_excitation_thresholds(s.n_atoms);
    body.kv("dip_threshold", -th.dip).kv("peak_threshold", th.peak);
    if (s.ns_mean - s.pair_sum / s.n_atoms > 0.0) body.kv("forward_ratio", forward_ratio(s.pair_sum, s.ns_mean, s.n_atoms));
  }
  body.kv("verdict", verdict_name(r.verdict));
  out.table("sum_rules", sum_rule_table(s, r));

  if (cfg.flag("witness.phase_diagram")) {
    const int nv = static_cast<int>(cfg.integer("witness.var_points"));
    const int np = static_cast<int>(cfg.integer("witness.p_points"));
    if (nv < 2 || np < 2) throw ConfigError("witness.var_points", "phase diagram needs at least 2 points per axis");
    const double n = s.n_atoms;
    std::vector<double> vg, pg;
    for (int i = 0; i < nv; ++i) vg.push_back(s.max_variance() * i / (nv - 1));
    for (int i = 0; i < np; ++i) pg.push_back(-n / 2.0 + (n * (n - 1.0) + n / 2.0) * i / (np - 1));
    out.table("phase_diagram", phase_diagram_table(s.n_atoms, s.ns_mean, phase_diagram_grid(s.n_atoms, s.ns_mean, vg, pg)));
  }
  if (cfg.flag("witness.dicke_map")) {
    const auto js = total_spin_values(s.n_atoms);
    const auto ms = magnetic_values(s.n_atoms);
    out.table("dicke_map", dicke_map_table(s.n_atoms, dicke_strength_map(s.n_atoms, js, ms)));
  }
  return out.report(body.str());
}

inline SweepConfig build_sweep_config(const RunConfig& cfg, ProbeMode mode) {
  SweepConfig sc;
  sc.mode = mode;
  sc.n_list.clear();
  for (double v : cfg.numbers("sensitivity.n_list")) sc.n_list.push_back(static_cast<int>(v));
  sc.k0 = wavevector(cfg);
  sc.fwhm = cfg.number("sensitivity.k0a") / sc.k0;
  sc.field.grad = Vec3(cfg.number("gradiometer.gradient_x"), cfg.number("gradiometer.gradient_y"), 0.0);
  sc.field.tau0 = cfg.number("gradiometer.tau0");
  sc.trials = static_cast<int>(cfg.integer("sensitivity.trials"));
  sc.shots = static_cast<int>(cfg.integer("sensitivity.shots"));
  sc.budget_scale = cfg.number("sensitivity.budget_scale");
  sc.window = cfg.number("sensitivity.window");
  sc.pixel = cfg.number("sensitivity.pixel");
  sc.seed = derive_seed(root_seed(cfg), streams::sweep);
  sc.threads = static_cast<unsigned>(cfg.integer("threads"));
  return sc;
}

inline std::string run_gradiometer(const RunConfig& cfg) {
  Outputs out(cfg, "gradiometer");
  ReportBody body;
  GradientField field{Vec3(cfg.number("gradiometer.gradient_x"), cfg.number("gradiometer.gradient_y"), 0.0),
                      cfg.number("gradiometer.tau0")};
  body.warn(dephasing_warnings("tau0", field.tau0, cfg.number("gradiometer.dephasing_time")));

  if (cfg.text("gradiometer.mode") == "sweep") {
    const std::string probe = cfg.text("sensitivity.probe");
    std::vector<ProbeMode> modes;
    if (probe != "pairs") modes.push_back(ProbeMode::collective);
    if (probe != "collective") modes.push_back(ProbeMode::pairs);
    std::vector<SweepResult> results;
    for (auto m : modes) {
      results.push_back(sensitivity_sweep(build_sweep_config(cfg, m)));
      const auto& r = results.back();
      out.table(std::string("sweep_") + probe_mode_name(m), sweep_table(r));
      body.kv(std::string("slope_") + probe_mode_name(m), r.slope)
          .kv(std::string("slope_stderr_") + probe_mode_name(m), r.slope_stderr);
      for (const auto& row : r.rows) {
        body.line(std::string(probe_mode_name(m)) + " N=" + std::to_string(row.n_atoms) +
                  " std=" + format_double(row.std_estimate) + " mean=" + format_double(row.mean_estimate) +
                  " strength=" + format_double(row.peak_strength));
      }
    }
    if (results.size() == 2) {
      CsvTable t({"n_atoms", "collective_strength", "pairs_strength", "ratio"});
      std::vector<double> lx, ly;
      for (std::size_t i = 0; i < results[0].rows.size(); ++i) {
        const auto& c = results[0].rows[i];
        const auto& p = results[1].rows[i];
        t.row(c.n_atoms, c.peak_strength, p.peak_strength, c.peak_strength / p.peak_strength);
        lx.push_back(std::log(c.n_atoms));
        ly.push_back(std::log(c.peak_strength / p.peak_strength));
      }
      out.table("strength_ratio", t);
      if (lx.size() >= 2) body.kv("strength_ratio_slope", fit_line(lx, ly).slope);
    }
    return out.report(body.str());
  }

  const auto s = build_summary(cfg);
  const auto pos = build_positions(cfg, s.n_atoms, 0);
  body.warn(dilute_warnings(pos));
  const auto grid = build_grid(cfg, pos);
  const auto photons = cfg.integer("gradiometer.photons");
  const auto measure = cfg.text("gradiometer.measure") == "wavevector" ? PhotonMeasure::wavevector
                                                                      : PhotonMeasure::solid_angle;
  const auto run = stokes::run_gradiometer(s, pos, field, grid, photons,
                                           derive_seed(root_seed(cfg), streams::photons),
                                           build_pattern_options(cfg), measure);
  out.image("image", run.intensity);
  if (photons > 0) out.image("counts", run.counts);
  const auto& e = run.estimate;
  const auto ref = reference_sensitivities(s.n_atoms, field.tau0, pos.transverse_size(), pos.k0);
  body.kv("true_grad_x", format_quantity(field.grad.x(), UnitKind::gradient))
      .kv("true_grad_y", format_quantity(field.grad.y(), UnitKind::gradient))
      .kv("estimated_grad_x", format_quantity(e.estimated_grad.x(), UnitKind::gradient))
      .kv("estimated_grad_y", format_quantity(e.estimated_grad.y(), UnitKind::gradient))
      .kv("sigma_x", format_quantity(std::sqrt(e.covariance(0, 0)), UnitKind::gradient))
      .kv("sigma_y", format_quantity(std::sqrt(e.covariance(1, 1)), UnitKind::gradient))
      .kv("cov_xy", e.covariance(0, 1))
      .kv("photons_used", static_cast<long long>(e.photons_used))
      .kv("fit_method", e.method == FitMethod::gaussian ? "gaussian" : "centroid")
      .kv("fit_residual", e.fit_residual)
      .kv("pixel_size", format_quantity(grid.dkx(), UnitKind::wavevector))
      .kv("reference_diffraction", format_quantity(ref.diffraction, UnitKind::gradient))
      .kv("reference_sql_pairs", format_quantity(ref.sql_pairs, UnitKind::gradient))
      .kv("reference_mzi", format_quantity(ref.mzi, UnitKind::gradient));
  return out.report(body.str());
}

inline std::string run_thermometry(const RunConfig& cfg) {
  Outputs out(cfg, "thermometry");
  ReportBody body;
  MotionParams m;
  m.temperature = cfg.number("thermometry.temperature");
  m.mass = cfg.number("thermometry.mass");
  m.model = cfg.text("thermometry.model") == "langevin" ? MotionModel::langevin : MotionModel::ballistic;
  m.collision_rate = cfg.number("thermometry.collision_rate");
  m.dims = static_cast<int>(cfg.integer("thermometry.dims"));
  m.validate();
  const double tau_max = cfg.number("thermometry.tau1_max");
  body.warn(dephasing_warnings("tau1_max", tau_max, cfg.number("thermometry.dephasing_time")));
  const int points = static_cast<int>(cfg.integer("thermometry.points"));
  if (points < 2) throw ConfigError("thermometry.points", "need at least 2 points", cfg.line("thermometry.points"));
  std::vector<double> taus;
  for (int i = 0; i < points; ++i) taus.push_back(tau_max * i / (points - 1));

  double g = cfg.number("thermometry.imprint_gradient");
  if (!(g > 0.0)) {
    const double msd = mean_square_displacement(m, tau_max);
    if (!(msd > 0.0)) {
      throw ConfigError("thermometry.imprint_gradient",
                        "cannot be derived at zero temperature; set it explicitly (e.g. '5e4 rad/m')");
    }
    g = std::sqrt(cfg.number("thermometry.max_exponent") * m.dims / msd);
  }
  const auto s = build_summary(cfg);
  if (!(s.pair_sum > 0.0)) throw DomainError("thermometry: the probe state needs P > 0 for a peak");
  const auto pos = build_positions(cfg, s.n_atoms, 0);
  const auto curve = thermometry_run(s, pos, Vec3(g, 0.0, 0.0), taus, m, root_seed(cfg), 0.05,
                                     static_cast<unsigned>(cfg.integer("threads")));
  out.table("curve", thermometry_table(curve));
  body.warn(curve.warnings);
  body.kv("model", motion_model_name(m.model))
      .kv("dims", m.dims)
      .kv("imprint_gradient", format_quantity(g, UnitKind::wavevector))
      .kv("input_temperature", format_quantity(m.temperature, UnitKind::temperature))
      .kv("fitted_temperature", format_quantity(curve.fitted_temperature, UnitKind::temperature))
      .kv("fitted_msd_coefficient", format_double(curve.fitted_msd_coefficient) + " m^2/s^2")
      .kv("fit_rms_residual", curve.fit_rms_residual);
  return out.report(body.str());
}

inline std::string run_oracle_check_command(const RunConfig& cfg, bool& pass) {
  Outputs out(cfg, "oracle");
  ReportBody body;
  OracleCheckOptions opt;
  opt.max_n = static_cast<int>(cfg.integer("oracle.max_n"));
  opt.random_states = static_cast<int>(cfg.integer("oracle.random_states"));
  opt.seed = derive_seed(root_seed(cfg), streams::oracle);
  const auto r = run_oracle_check(opt);
  CsvTable t({"n_atoms", "family", "states", "summary_deviation", "pixel_deviation"});
  for (const auto& row : r.rows) {
    t.row(row.n_atoms, row.family, row.states, row.summary_deviation, row.pixel_deviation);
  }
  out.table("deviations", t);
  body.kv("states_checked", r.states_checked)
      .kv("max_abs_deviation", r.max_deviation)
      .kv("tolerance", opt.tolerance)
      .kv("result", r.pass ? "pass" : "fail");
  pass = r.pass;
  return out.report(body.str());
}

inline std::string run_batch(const RunConfig& cfg) {
  Outputs out(cfg, "sweep");
  ReportBody body;
  const std::string axis = cfg.text("batch.axis");
  const auto* spec = find_key(axis);
  if (!spec || spec->execution_only || axis.rfind("batch.", 0) == 0) {
    throw ConfigError("batch.axis", "'" + axis + "' is not a scannable config key", cfg.line("batch.axis"));
  }
  const auto& values = cfg.texts("batch.values");
  if (values.empty()) throw ConfigError("batch.values", "no values to scan", cfg.line("batch.values"));
  CsvTable t({"value", "n_atoms", "ns_mean", "ns_var", "pair_sum", "ratio", "ratio_std", "readout_ratio",
              "zero_background_ratio", "verdict"});
  t.meta("axis", axis);
  for (const auto& v : values) {
    RunConfig point = cfg;
    point.set(axis, v, cfg.line("batch.values"));
    const auto s = build_summary(point);
    const auto stats = averaged_ratio(point, s);
    const auto w = evaluate_sum_rules(s);
    t.row(v, s.n_atoms, s.ns_mean, s.ns_var, s.pair_sum, stats.mean, stats.stddev, readout_ratio(s),
          zero_background_ratio(s), verdict_name(w.verdict));
  }
  out.table("table", t);
  body.kv("axis", axis).kv("points", static_cast<int>(values.size()));
  return out.report(body.str());
}

/// Runs one subcommand; library errors become category exit codes.
inline int run_subcommand(const std::string& name, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    std::string report;
    int code = 0;
    if (name == "diffract") {
      report = run_diffract(cfg);
    } else if (name == "witness") {
      report = run_witness(cfg);
    } else if (name == "gradiometer") {
      report = run_gradiometer(cfg);
    } else if (name == "thermometry") {
      report = run_thermometry(cfg);
    } else if (name == "oracle-check") {
      bool pass = false;
      report = run_oracle_check_command(cfg, pass);
      if (!pass) code = static_cast<int>(ErrorCategory::numerical);
    } else if (name == "sweep") {
      report = run_batch(cfg);
    } else {
      err << "error: unknown subcommand '" << name << "'\n";
      return static_cast<int>(ErrorCategory::config);
    }
    out << report;
    return code;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  }
}

}  // namespace stokes::cli
