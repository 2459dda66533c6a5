#pragma once

// Gradiometry by peak displacement and thermometry by peak decay.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stokes/core.hpp"
#include "stokes/diffraction.hpp"
#include "stokes/ensemble.hpp"
#include "stokes/parallel.hpp"
#include "stokes/peak_fit.hpp"
#include "stokes/rng.hpp"
#include "stokes/spin_states.hpp"

namespace stokes {

// ---------------------------------------------------------------------------
// Gradiometry

struct GradientField {
  Vec3 grad = Vec3::Zero();  // rad/(s m)
  double tau0 = 0.0;         // s

  void validate() const {
    if (!grad.allFinite() || !std::isfinite(tau0)) throw DomainError("gradient field must be finite");
    if (tau0 < 0.0) throw DomainError("gradient field: tau0 must be nonnegative");
  }
  /// In-plane peak displacement tau0 * grad, rad/m.
  Vec2 displacement() const { return tau0 * grad.head<2>(); }
};

/// phi_j = tau0 grad . r_j
inline PhaseProfile imprint_gradient(const EnsemblePositions& pos, const GradientField& field) {
  field.validate();
  PhaseProfile out;
  out.phases.reserve(pos.coordinates.size());
  for (const auto& r : pos.coordinates) out.phases.push_back(field.tau0 * field.grad.dot(r));
  return out;
}

/// Warns when a free-evolution time exceeds the dephasing time.
inline Warnings dephasing_warnings(const std::string& what, double tau, double dephasing_time) {
  Warnings w;
  if (dephasing_time > 0.0 && tau > dephasing_time) {
    w.push_back(what + " = " + std::to_string(tau) + " s exceeds the dephasing time " +
                std::to_string(dephasing_time) + " s");
  }
  return w;
}

struct GradiometerEstimate {
  Vec3 estimated_grad = Vec3::Zero();  // rad/(s m); z is not observed
  Mat2 covariance = Mat2::Zero();      // in-plane, (rad/(s m))^2
  std::int64_t photons_used = 0;
  double fit_residual = 0.0;
  FitMethod method = FitMethod::gaussian;
};

inline GradiometerEstimate estimate_gradient(const PeakFit& fit, double tau0, std::int64_t photons_used = 0) {
  if (!(tau0 > 0.0)) throw DomainError("estimate_gradient: tau0 must be positive");
  GradiometerEstimate e;
  e.estimated_grad = Vec3(fit.center.x() / tau0, fit.center.y() / tau0, 0.0);
  e.covariance = fit.covariance / (tau0 * tau0);
  e.photons_used = photons_used;
  e.fit_residual = fit.residual;
  e.method = fit.method;
  return e;
}

struct GradiometerRun {
  DiffractionImage intensity;
  DiffractionImage counts;  // empty values when photons == 0
  PeakFit fit;
  GradiometerEstimate estimate;
};

/// Imprint, image, draw photons (skipped for photons == 0) and fit.
inline GradiometerRun run_gradiometer(const StateSummary& s, const EnsemblePositions& pos,
                                      const GradientField& field, const GridSpec& grid,
                                      std::int64_t photons, std::uint64_t seed,
                                      PatternOptions opt = {},
                                      PhotonMeasure measure = PhotonMeasure::solid_angle) {
  if (!(field.tau0 > 0.0)) throw DomainError("gradiometer: tau0 must be positive");
  GradiometerRun run;
  PhaseProfile phases;
  if (opt.model == StructureModel::ensemble_average && !std::holds_alternative<Lattice>(pos.geometry)) {
    field.validate();
    opt.phase_gradient = field.tau0 * field.grad;
  } else {
    phases = imprint_gradient(pos, field);
  }
  run.intensity = collective_pattern(s, pos, phases.phases, grid, opt);
  if (photons > 0) {
    run.counts = photon_counts(run.intensity, photons, seed, measure);
    run.fit = fit_peak(run.counts);
  } else {
    run.fit = fit_peak(run.intensity);
  }
  run.estimate = estimate_gradient(run.fit, field.tau0, photons);
  return run;
}

struct ReferenceSensitivities {
  double diffraction = 0.0;  // (1/N) k0 / (tau0 sqrt(k0 A))
  double sql_pairs = 0.0;    // (1/sqrt N) k0 / (tau0 sqrt(k0 A))
  double mzi = 0.0;          // (1/sqrt N) / (tau0 A)
};

inline ReferenceSensitivities reference_sensitivities(int n_atoms, double tau0, double size, double k0) {
  if (n_atoms < 1 || !(tau0 > 0.0) || !(size > 0.0) || !(k0 > 0.0)) {
    throw DomainError("reference_sensitivities: inputs must be positive");
  }
  const double n = n_atoms;
  const double base = k0 / (tau0 * std::sqrt(k0 * size));
  return {base / n, base / std::sqrt(n), 1.0 / (std::sqrt(n) * tau0 * size)};
}

// ---------------------------------------------------------------------------
// Sensitivity sweep (1D Gaussian ensembles)

enum class ProbeMode { collective, pairs };

inline const char* probe_mode_name(ProbeMode m) { return m == ProbeMode::collective ? "collective" : "pairs"; }

struct SweepConfig {
  ProbeMode mode = ProbeMode::collective;
  std::vector<int> n_list{8, 16, 32, 64, 128};
  double k0 = 2.0 * kPi / 780e-9;
  double fwhm = 512.0 / (2.0 * kPi / 780e-9);  // k0 A = 512
  GradientField field{Vec3(10.0, 0.0, 0.0), 1.0};
  int trials = 200;
  int shots = 2000;             // repeated shots pooled per trial, positions fixed
  double budget_scale = 1.0;    // photons per probe per shot = budget_scale * <N_s>
  double window = 8.0;          // half-width of the fit window, units of 1/sigma
  double pixel = 0.25;          // pixel size, units of 1/sigma
  std::uint64_t seed = 1;
  unsigned threads = 1;

  void validate() const {
    if (n_list.empty()) throw DomainError("sweep: empty atom-number list");
    if (trials < 2) throw DomainError("sweep: need at least 2 trials");
    if (shots < 1) throw DomainError("sweep: shots must be positive");
    if (!(budget_scale > 0.0)) throw DomainError("sweep: budget_scale must be positive");
    if (!(k0 > 0.0) || !(fwhm > 0.0)) throw DomainError("sweep: k0 and fwhm must be positive");
    if (!(window > 0.0) || !(pixel > 0.0) || pixel >= window) throw DomainError("sweep: bad window/pixel");
    if (!(field.tau0 > 0.0)) throw DomainError("sweep: tau0 must be positive");
    for (int n : n_list) {
      if (n < 2 || n % 2 != 0) throw DomainError("sweep: atom numbers must be even and >= 2");
      const double bound = k0 * fwhm;
      if (n > bound) {
        throw DomainError("sweep: N = " + std::to_string(n) + " exceeds the dilute bound k0*A = " +
                          std::to_string(bound) + "; multiple scattering is no longer perturbative");
      }
    }
  }
};

struct SweepRow {
  int n_atoms = 0;
  int trials = 0;
  double mean_estimate = 0.0;   // rad/(s m), x component
  double std_estimate = 0.0;    // rad/(s m)
  double peak_strength = 0.0;   // feature height above the incoherent level, mean over trials
  double photons_per_trial = 0.0;
  double reference = 0.0;       // closed-form sensitivity for this mode
};

struct SweepResult {
  ProbeMode mode = ProbeMode::collective;
  std::vector<SweepRow> rows;
  double slope = 0.0;  // d log(std) / d log(N)
  double slope_stderr = 0.0;
};

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double rms_residual = 0.0;
};

/// Ordinary least squares y = a + b x.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw NumericalError("fit_line: need at least 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw NumericalError("fit_line: abscissae are all equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    ss += r * r;
  }
  f.rms_residual = std::sqrt(ss / n);
  f.slope_stderr = x.size() > 2 ? std::sqrt(ss / (n - 2.0) / sxx) : 0.0;
  return f;
}

namespace detail {

struct TrialOutcome {
  double estimate = 0.0;
  double strength = 0.0;
  double photons = 0.0;
};

/// Golden-section maximum of a unimodal f on [lo, hi].
template <class F>
double golden_maximum(F&& f, double lo, double hi, int iterations = 40) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < iterations; ++it) {
    if (f1 > f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = f(x2);
    }
  }
  return 0.5 * (lo + hi);
}

/// Grid scan of f over center +- half steps, then (refine != 0) golden-section
/// refinement around the best grid point.
template <class F>
double scan_maximum(F&& f, double center, double step, int half, int refine = 1) {
  double best_x = center, best_f = -std::numeric_limits<double>::infinity();
  for (int i = -half; i <= half; ++i) {
    const double x = center + i * step;
    const double v = f(x);
    if (v > best_f) {
      best_f = v;
      best_x = x;
    }
  }
  return refine ? golden_maximum(f, best_x - step, best_x + step) : best_x;
}

inline TrialOutcome collective_trial(const SweepConfig& cfg, const EnsemblePositions& pos,
                                     std::uint64_t seed) {
  const int n = pos.size();
  const double sigma = fwhm_to_sigma(cfg.fwhm);
  const double q = cfg.field.displacement().x();
  const auto phases = imprint_gradient(pos, cfg.field);
  const StateSummary s = coherent_summary(n, kPi / 2.0, 0.0);

  const int half = static_cast<int>(std::lround(cfg.window / cfg.pixel));
  const double step = cfg.pixel / sigma;
  const GridSpec grid = GridSpec::line(q - half * step, q + half * step, 2 * half + 1);
  const auto img = collective_pattern(s, pos, phases.phases, grid);

  // Fraction of all emitted photons (uniform in k_x over [-k0, k0]) landing in the window.
  double window_mass = 0.0;
  for (double v : img.values) window_mass += v * step;
  double cross = 0.0;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const double d = pos.coordinates[a].x() - pos.coordinates[b].x();
      const double dphi = phases.phases[a] - phases.phases[b];
      const double kd = cfg.k0 * d;
      const double integral = std::abs(d) < 1e-300 ? 2.0 * cfg.k0 : 2.0 * std::sin(kd) / d;
      cross += 2.0 * std::cos(dphi) * integral;
    }
  }
  const double nn = n;
  const double structure_integral = 2.0 * cfg.k0 * nn + cross;
  const double total_mass = 2.0 * cfg.k0 * (s.ns_mean - s.pair_sum / (nn - 1.0)) +
                            s.pair_sum * structure_integral / (nn * nn - nn);
  const double fraction = std::clamp(window_mass / total_mass, 0.0, 1.0);

  const auto budget = static_cast<std::int64_t>(std::llround(cfg.shots * cfg.budget_scale * s.ns_mean));
  Rng rng(derive_seed(seed, streams::photons, 0));
  std::binomial_distribution<std::int64_t> detected(budget, fraction);
  const std::int64_t in_window = detected(rng);
  const auto counts = photon_counts(img, in_window, derive_seed(seed, streams::photons, 1),
                                    PhotonMeasure::wavevector);

  // Binned Poisson likelihood of the window counts under the known-geometry template.
  auto log_likelihood = [&](double qq) {
    std::vector<Complex> sum(grid.nx, 0.0);
    for (const auto& r : pos.coordinates) {
      Complex phase = std::polar(1.0, (qq - grid.kx_min) * r.x());
      const Complex turn = std::polar(1.0, -step * r.x());
      for (int i = 0; i < grid.nx; ++i, phase *= turn) sum[i] += phase;
    }
    std::vector<double> model(grid.nx);
    double total = 0.0;
    for (int i = 0; i < grid.nx; ++i) {
      model[i] = pattern_value(s, std::norm(sum[i]));
      total += model[i];
    }
    double ll = 0.0;
    for (int i = 0; i < grid.nx; ++i) {
      if (counts.values[i] > 0.0) ll += counts.values[i] * std::log(model[i] / total);
    }
    return ll;
  };
  const double scan_step = 0.05 / sigma;
  const int scan_half = static_cast<int>(std::lround(cfg.window / 0.05));
  const double best = scan_maximum(log_likelihood, q, scan_step, scan_half);

  TrialOutcome out;
  out.estimate = best / cfg.field.tau0;
  out.strength = pattern_at(s, pos, phases.phases, Vec2(q, 0.0)) - s.ns_mean;
  out.photons = static_cast<double>(in_window);
  return out;
}

inline TrialOutcome pairs_trial(const SweepConfig& cfg, const EnsemblePositions& pos, std::uint64_t seed) {
  const int n_pairs = pos.size() / 2;
  const double sigma = fwhm_to_sigma(cfg.fwhm);
  const double q = cfg.field.displacement().x();
  const double k0 = cfg.k0;
  const auto photons_per_pair = static_cast<int>(std::lround(cfg.shots * cfg.budget_scale * 1.0));

  // Two-atom in-plane coherent probe: I(k) = 1 + cos((k - q) d) / 2 on [-k0, k0].
  std::vector<double> sep(n_pairs);
  std::vector<std::vector<double>> ks(n_pairs);
  Rng rng(derive_seed(seed, streams::photons, 2));
  std::uniform_real_distribution<double> uk(-k0, k0), accept(0.0, 1.5);
  for (int p = 0; p < n_pairs; ++p) {
    const double d = pos.coordinates[2 * p].x() - pos.coordinates[2 * p + 1].x();
    sep[p] = d;
    auto& k = ks[p];
    k.reserve(photons_per_pair);
    while (static_cast<int>(k.size()) < photons_per_pair) {
      const double kk = uk(rng);
      if (accept(rng) < 1.0 + 0.5 * std::cos((kk - q) * d)) k.push_back(kk);
    }
  }

  auto log_likelihood = [&](double qq) {
    double ll = 0.0;
    for (int p = 0; p < n_pairs; ++p) {
      const double d = sep[p];
      for (double kk : ks[p]) ll += std::log1p(0.5 * std::cos((kk - qq) * d));
      const double norm = 2.0 * k0 + (std::abs(d) > 0.0 ? std::cos(qq * d) * std::sin(k0 * d) / d : k0);
      ll -= static_cast<double>(ks[p].size()) * std::log(norm);
    }
    return ll;
  };

  // Coarse scan of the linearized likelihood sum_p Re[Z_p exp(-i q d_p)] over the prior window.
  std::vector<Complex> z(n_pairs);
  for (int p = 0; p < n_pairs; ++p) {
    Complex acc = 0.0;
    for (double kk : ks[p]) acc += std::polar(1.0, kk * sep[p]);
    z[p] = acc;
  }
  const double scan_step = 0.01 / sigma;
  const int scan_half = static_cast<int>(std::lround(cfg.window / 0.01));
  auto linearized = [&](double qq) {
    double f = 0.0;
    for (int p = 0; p < n_pairs; ++p) f += (z[p] * std::polar(1.0, -qq * sep[p])).real();
    return f;
  };
  const double coarse = scan_maximum(linearized, q, scan_step, scan_half, 0);
  const double best = golden_maximum(log_likelihood, coarse - scan_step, coarse + scan_step);

  TrialOutcome out;
  out.estimate = best / cfg.field.tau0;
  out.strength = 0.5 * n_pairs;  // sum over pairs of I(q) - <N_s> = 1/2 each
  out.photons = static_cast<double>(n_pairs) * photons_per_pair;
  return out;
}

}  // namespace detail

inline SweepResult sensitivity_sweep(const SweepConfig& cfg) {
  cfg.validate();
  SweepResult result;
  result.mode = cfg.mode;
  const Geometry geometry = Gaussian1D{cfg.fwhm};
  for (int n : cfg.n_list) {
    std::vector<detail::TrialOutcome> outcomes(cfg.trials);
    const std::uint64_t n_seed = derive_seed(cfg.seed, streams::sweep, static_cast<std::uint64_t>(n));
    parallel_for(outcomes.size(), cfg.threads, [&](std::size_t t) {
      const std::uint64_t trial_seed = derive_seed(n_seed, streams::sweep, t);
      const auto pos = sample_positions(geometry, n, derive_seed(trial_seed, streams::positions), cfg.k0);
      outcomes[t] = cfg.mode == ProbeMode::collective ? detail::collective_trial(cfg, pos, trial_seed)
                                                      : detail::pairs_trial(cfg, pos, trial_seed);
    });
    SweepRow row;
    row.n_atoms = n;
    row.trials = cfg.trials;
    double sum = 0.0, strength = 0.0, photons = 0.0;
    for (const auto& o : outcomes) {
      sum += o.estimate;
      strength += o.strength;
      photons += o.photons;
    }
    row.mean_estimate = sum / cfg.trials;
    double ss = 0.0;
    for (const auto& o : outcomes) ss += (o.estimate - row.mean_estimate) * (o.estimate - row.mean_estimate);
    row.std_estimate = std::sqrt(ss / (cfg.trials - 1));
    row.peak_strength = strength / cfg.trials;
    row.photons_per_trial = photons / cfg.trials;
    const auto ref = reference_sensitivities(n, cfg.field.tau0, cfg.fwhm, cfg.k0);
    row.reference = cfg.mode == ProbeMode::collective ? ref.diffraction : ref.sql_pairs;
    result.rows.push_back(row);
  }
  if (result.rows.size() >= 2) {
    std::vector<double> lx, ly;
    for (const auto& r : result.rows) {
      if (!(r.std_estimate > 0.0)) throw NumericalError("sweep: zero spread of the estimator");
      lx.push_back(std::log(r.n_atoms));
      ly.push_back(std::log(r.std_estimate));
    }
    const auto f = fit_line(lx, ly);
    result.slope = f.slope;
    result.slope_stderr = f.slope_stderr;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Thermometry

enum class MotionModel { ballistic, langevin };

inline const char* motion_model_name(MotionModel m) { return m == MotionModel::ballistic ? "ballistic" : "langevin"; }

struct MotionParams {
  double temperature = 0.0;     // K
  double mass = kRb87Mass;      // kg
  MotionModel model = MotionModel::ballistic;
  double collision_rate = 0.0;  // 1/s, velocity relaxation rate (langevin)
  int dims = 3;                 // number of axes along which atoms move

  void validate() const {
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) throw DomainError("motion: temperature must be >= 0");
    if (!(mass > 0.0)) throw DomainError("motion: mass must be positive");
    if (dims < 1 || dims > 3) throw DomainError("motion: dims must be 1, 2 or 3");
    if (model == MotionModel::langevin && !(collision_rate > 0.0)) {
      throw DomainError("motion: langevin model needs a positive collision rate");
    }
    if (collision_rate < 0.0) throw DomainError("motion: negative collision rate");
  }

  double thermal_velocity_variance() const { return kBoltzmann * temperature / mass; }
};

namespace detail {

/// Per-axis mean square displacement over tau in units of k_B T / m (s^2).
inline double msd_basis(MotionModel model, double gamma, double tau) {
  if (model == MotionModel::ballistic) return tau * tau;
  const double x = gamma * tau;
  const double tail = x < 1e-4 ? x * x / 2.0 - x * x * x / 6.0 : x - 1.0 + std::exp(-x);
  return 2.0 * tail / (gamma * gamma);
}

/// 2x - 3 + 4 e^{-x} - e^{-2x}, accurate at small x.
inline double ou_noise_factor(double x) {
  if (x < 1e-2) return (2.0 / 3.0) * x * x * x - 0.5 * x * x * x * x + (7.0 / 30.0) * std::pow(x, 5);
  return 2.0 * x - 3.0 + 4.0 * std::exp(-x) - std::exp(-2.0 * x);
}

}  // namespace detail

/// Mean square displacement <Delta r^2> = dims * (k_B T / m) * basis(tau).
inline double mean_square_displacement(const MotionParams& m, double tau) {
  return m.dims * m.thermal_velocity_variance() * detail::msd_basis(m.model, m.collision_rate, tau);
}

/// Moves every atom for time tau. Velocities are Maxwell-Boltzmann per axis;
/// the langevin model samples the exact Ornstein-Uhlenbeck displacement given
/// the initial velocity. For a fixed seed the initial velocities do not depend
/// on tau, so ballistic runs over a tau grid follow one trajectory.
inline EnsemblePositions simulate_motion(const EnsemblePositions& pos, const MotionParams& m, double tau,
                                         std::uint64_t seed) {
  m.validate();
  if (!(tau >= 0.0)) throw DomainError("motion: tau must be >= 0");
  EnsemblePositions out = pos;
  if (m.temperature == 0.0 || tau == 0.0) return out;
  const double s = std::sqrt(m.thermal_velocity_variance());
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& r : out.coordinates) {
    for (int axis = 0; axis < m.dims; ++axis) {
      const double v0 = s * normal(rng);
      const double xi = normal(rng);
      if (m.model == MotionModel::ballistic) {
        r[axis] += v0 * tau;
      } else {
        const double g = m.collision_rate;
        const double drift = v0 * -std::expm1(-g * tau) / g;
        const double noise = s / g * std::sqrt(std::max(0.0, detail::ou_noise_factor(g * tau)));
        r[axis] += drift + noise * xi;
      }
    }
  }
  return out;
}

struct ThermometryCurve {
  std::vector<double> tau1_grid;        // s
  std::vector<double> peak_strengths;   // P S / (N^2 - N) at the displaced peak
  double fitted_temperature = 0.0;      // K
  double fitted_msd_coefficient = 0.0;  // m^2/s^2, <Delta r^2> / tau^2 at short times
  double fit_intercept = 0.0;           // log strength at tau = 0
  double fit_rms_residual = 0.0;
  MotionModel model = MotionModel::ballistic;
  int dims = 3;
  Warnings warnings;
};

/// Peak decay S(tau) ~ (N^2/4) exp(-|grad phi|^2 <Delta r^2> / dims); the log
/// strength is fitted linearly against the per-axis displacement basis.
inline ThermometryCurve thermometry_run(const StateSummary& s, const EnsemblePositions& pos,
                                        const Vec3& grad_phi, std::span<const double> tau1_grid,
                                        const MotionParams& motion, std::uint64_t seed,
                                        double monotone_tolerance = 0.05, unsigned threads = 1) {
  motion.validate();
  if (s.n_atoms != pos.size()) throw DomainError("thermometry: summary and positions disagree on N");
  if (tau1_grid.size() < 2) throw DomainError("thermometry: need at least 2 tau1 points");
  const double g2 = grad_phi.squaredNorm();
  if (!(g2 > 0.0)) throw DomainError("thermometry: imprint gradient must be nonzero");
  for (std::size_t i = 0; i < tau1_grid.size(); ++i) {
    if (!(tau1_grid[i] >= 0.0)) throw DomainError("thermometry: tau1 must be >= 0");
    if (i > 0 && !(tau1_grid[i] > tau1_grid[i - 1])) throw DomainError("thermometry: tau1 grid must increase");
  }

  ThermometryCurve curve;
  curve.model = motion.model;
  curve.dims = motion.dims;
  curve.tau1_grid.assign(tau1_grid.begin(), tau1_grid.end());
  curve.peak_strengths.resize(tau1_grid.size());

  std::vector<double> phases;
  phases.reserve(pos.coordinates.size());
  for (const auto& r : pos.coordinates) phases.push_back(grad_phi.dot(r));
  const double n = s.n_atoms;
  const Vec3 dk = transfer_vector(grad_phi.x(), grad_phi.y(), pos.k0);

  for (double tau : tau1_grid) {
    const double exponent = g2 * mean_square_displacement(motion, tau) / motion.dims;
    if (exponent > 0.5) {
      curve.warnings.push_back("thermometry: |grad phi|^2 <dr^2> / dims = " + std::to_string(exponent) +
                               " at tau1 = " + std::to_string(tau) + " s is not small");
    }
  }

  const std::uint64_t motion_seed = derive_seed(seed, streams::motion);
  parallel_for(tau1_grid.size(), threads, [&](std::size_t i) {
    const auto moved = simulate_motion(pos, motion, tau1_grid[i], motion_seed);
    curve.peak_strengths[i] = s.pair_sum * structure_term(moved, phases, dk) / (n * n - n);
  });

  for (std::size_t i = 1; i < curve.peak_strengths.size(); ++i) {
    if (curve.peak_strengths[i] > curve.peak_strengths[i - 1] * (1.0 + monotone_tolerance)) {
      throw NumericalError("thermometry: peak strength rises from " + std::to_string(curve.peak_strengths[i - 1]) +
                           " to " + std::to_string(curve.peak_strengths[i]) + " beyond the noise tolerance");
    }
  }
  std::vector<double> x, y;
  for (std::size_t i = 0; i < tau1_grid.size(); ++i) {
    if (!(curve.peak_strengths[i] > 0.0)) throw NumericalError("thermometry: peak strength vanished");
    x.push_back(detail::msd_basis(motion.model, motion.collision_rate, tau1_grid[i]));
    y.push_back(std::log(curve.peak_strengths[i]));
  }
  const auto fit = fit_line(x, y);
  // log S = const - |grad phi|^2 (k_B T / m) basis(tau)
  const double velocity_variance = std::max(0.0, -fit.slope / g2);
  curve.fitted_temperature = motion.mass * velocity_variance / kBoltzmann;
  curve.fitted_msd_coefficient = motion.dims * velocity_variance;
  curve.fit_intercept = fit.intercept;
  curve.fit_rms_residual = fit.rms_residual;
  return curve;
}

}  // namespace stokes
