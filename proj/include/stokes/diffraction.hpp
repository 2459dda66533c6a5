#pragma once

// Far-field Stokes diffraction images from the sufficient statistics of a
// permutation-symmetric spin state:
//
//   I_c(dk) = <N_s> - P/(N-1) + P |sum_j exp(i(phi_j - dk.r_j))|^2 / (N^2 - N)
//
// The structure term equals N^2 in the forward direction and falls to the
// incoherent level N beyond the boundary angle theta_b.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stokes/core.hpp"
#include "stokes/ensemble.hpp"
#include "stokes/parallel.hpp"
#include "stokes/rng.hpp"
#include "stokes/spin_states.hpp"

namespace stokes {

/// theta_b = min{ sqrt(pi / (k0 H)), 2 pi / (k0 A) }; without H only the second branch.
inline double boundary_angle(double k0, double transverse, std::optional<double> longitudinal = {}) {
  if (!(k0 > 0.0) || !(transverse > 0.0)) {
    throw DomainError("boundary_angle: k0 and A must be positive");
  }
  double theta = 2.0 * kPi / (k0 * transverse);
  if (longitudinal) {
    if (!(*longitudinal > 0.0)) throw DomainError("boundary_angle: H must be positive");
    theta = std::min(theta, std::sqrt(kPi / (k0 * *longitudinal)));
  }
  return theta;
}

inline double boundary_angle(const EnsemblePositions& pos) {
  return boundary_angle(pos.k0, pos.transverse_size(), pos.longitudinal_size());
}

/// |sum_j exp(i(phi_j - dk.r_j))|^2. An empty phase span means all phases are zero.
inline double structure_term(const EnsemblePositions& pos, std::span<const double> phases,
                             const Vec3& dk) {
  if (!phases.empty() && phases.size() != pos.coordinates.size()) {
    throw DomainError("structure_term: phase profile length does not match atom count");
  }
  double re = 0.0, im = 0.0;
  for (std::size_t j = 0; j < pos.coordinates.size(); ++j) {
    const double arg = (phases.empty() ? 0.0 : phases[j]) - dk.dot(pos.coordinates[j]);
    re += std::cos(arg);
    im += std::sin(arg);
  }
  return re * re + im * im;
}

enum class StructureModel {
  fixed_positions,   // one sampled realization (speckle included)
  ensemble_average,  // N + N(N-1)|characteristic function|^2 of the geometry
};

enum class Envelope { identity, dipole };

struct PatternOptions {
  StructureModel model = StructureModel::fixed_positions;
  Envelope envelope = Envelope::identity;
  /// Phase gradient q for the ensemble-averaged model (fixed positions take a PhaseProfile).
  Vec3 phase_gradient = Vec3::Zero();
  unsigned threads = 1;
};

/// I_c in terms of the structure term S; may be negative for unphysical summaries.
inline double pattern_value(const StateSummary& s, double structure) {
  const double n = s.n_atoms;
  return s.ns_mean - s.pair_sum / (n - 1.0) + s.pair_sum * structure / (n * n - n);
}

/// Single-atom emission envelope I_s; the dipole factor assumes a dipole along x.
inline double envelope_factor(Envelope e, const Vec3& dk, double k0) {
  if (e == Envelope::identity) return 1.0;
  const double ux = dk.x() / k0;
  return std::max(0.0, 1.0 - ux * ux);
}

/// Ensemble average of the structure term over the geometry's position distribution.
inline double mean_structure_term(const Geometry& g, int n_atoms, const Vec3& dk) {
  const double n = n_atoms;
  double char2 = 0.0;
  if (const auto* p = std::get_if<Gaussian2D>(&g)) {
    const double s = fwhm_to_sigma(p->fwhm);
    char2 = std::exp(-(dk.x() * dk.x() + dk.y() * dk.y()) * s * s);
  } else if (const auto* p = std::get_if<Gaussian1D>(&g)) {
    const double s = fwhm_to_sigma(p->fwhm);
    char2 = std::exp(-dk.x() * dk.x() * s * s);
  } else if (const auto* p = std::get_if<Slab>(&g)) {
    auto sinc2 = [](double x) {
      if (std::abs(x) < 1e-8) return 1.0;
      const double v = std::sin(x) / x;
      return v * v;
    };
    char2 = sinc2(dk.x() * p->width / 2.0) * sinc2(dk.y() * p->width / 2.0) *
            sinc2(dk.z() * p->height / 2.0);
  } else {
    throw DomainError("mean_structure_term: lattices are deterministic, use fixed positions");
  }
  return n + n * (n - 1.0) * char2;
}

/// Structure term under the chosen model at wavevector transfer dk.
inline double model_structure_term(const EnsemblePositions& pos, std::span<const double> phases,
                                   const Vec3& dk, const PatternOptions& opt) {
  if (opt.model == StructureModel::ensemble_average && !std::holds_alternative<Lattice>(pos.geometry)) {
    if (!phases.empty()) {
      throw DomainError("ensemble-averaged pattern: pass a phase gradient, not a phase profile");
    }
    return mean_structure_term(pos.geometry, pos.size(), dk - opt.phase_gradient);
  }
  return structure_term(pos, phases, dk);
}

/// Collective factor I_c (times the envelope) at one transverse wavevector.
inline double pattern_at(const StateSummary& s, const EnsemblePositions& pos,
                         std::span<const double> phases, const Vec2& kt,
                         const PatternOptions& opt = {}) {
  const Vec3 dk = transfer_vector(kt.x(), kt.y(), pos.k0);
  return envelope_factor(opt.envelope, dk, pos.k0) *
         pattern_value(s, model_structure_term(pos, phases, dk, opt));
}

inline void check_pattern_inputs(const StateSummary& s, const EnsemblePositions& pos) {
  if (s.n_atoms < 2) throw DomainError("collective_pattern: need N >= 2");
  if (s.n_atoms != pos.size()) {
    throw DomainError("collective_pattern: summary has " + std::to_string(s.n_atoms) +
                      " atoms but positions have " + std::to_string(pos.size()));
  }
}

/// Image of I_s * I_c over the grid. Negative pixels (only possible for
/// unphysical summaries) are clipped to zero and counted in clipped_pixels.
inline DiffractionImage collective_pattern(const StateSummary& s, const EnsemblePositions& pos,
                                           std::span<const double> phases, const GridSpec& grid,
                                           const PatternOptions& opt = {}) {
  check_pattern_inputs(s, pos);
  grid.validate();
  DiffractionImage img;
  img.grid = grid;
  img.values.assign(grid.size(), 0.0);
  img.mode = opt.model == StructureModel::ensemble_average && !std::holds_alternative<Lattice>(pos.geometry)
                 ? ImageMode::analytic
                 : ImageMode::fixed_positions;
  img.n_atoms = s.n_atoms;
  img.k0 = pos.k0;
  img.theta_b = boundary_angle(pos);

  parallel_for(grid.size(), opt.threads, [&](std::size_t idx) {
    const int i = static_cast<int>(idx % grid.nx);
    const int j = static_cast<int>(idx / grid.nx);
    img.values[idx] = pattern_at(s, pos, phases, Vec2(grid.kx(i), grid.ky(j)), opt);
  });
  for (double& v : img.values) {
    if (v < 0.0) {
      v = 0.0;
      ++img.clipped_pixels;
    }
  }
  return img;
}

/// I_c for an arbitrary (not necessarily symmetric) state,
/// from its pair-correlation matrix corr(a, b) = <sigma+_a sigma-_b>.
inline double pattern_from_pair_correlations(const Eigen::MatrixXcd& corr,
                                             const EnsemblePositions& pos, const Vec3& dk) {
  const auto n = static_cast<Eigen::Index>(pos.coordinates.size());
  if (corr.rows() != n || corr.cols() != n) {
    throw DomainError("pattern_from_pair_correlations: matrix size does not match atom count");
  }
  Eigen::VectorXcd phase(n);
  for (Eigen::Index a = 0; a < n; ++a) phase[a] = std::polar(1.0, -dk.dot(pos.coordinates[a]));
  // sum_{a,b} exp(-i dk.(r_b - r_a)) corr(a, b)
  const Complex total = (phase.adjoint() * corr * phase)(0, 0);
  return total.real();
}

// ---------------------------------------------------------------------------
// Peak / dip to background ratio

enum class BackgroundEstimator { ring, point };

struct RatioMeasurement {
  double peak = 0.0;        // I at the peak centre
  double background = 0.0;  // I at theta_b
  double ratio = 0.0;       // (peak - background) / background
};

/// Large-N readout formula r = P / (<N_s> - P/N).
inline double readout_ratio(const StateSummary& s) {
  return s.pair_sum / (s.ns_mean - s.pair_sum / s.n_atoms);
}

/// Exact pattern ratio with the structure term exactly N^2 at the peak and 0 at theta_b.
inline double zero_background_ratio(const StateSummary& s) {
  const double n = s.n_atoms;
  return (s.pair_sum + s.pair_sum / (n - 1.0)) / (s.ns_mean - s.pair_sum / (n - 1.0));
}

/// Transverse sample points on the theta_b "ring". Linear ensembles scatter
/// only along x, so their ring is the pair of points at +-k_b.
inline std::vector<Vec2> background_points(double k0, double theta_b, bool linear,
                                           BackgroundEstimator est, int ring_samples,
                                           const Vec2& center = Vec2::Zero()) {
  const double kb = k0 * std::sin(theta_b);
  std::vector<Vec2> pts;
  if (linear) {
    pts.emplace_back(center.x() + kb, center.y());
    if (est == BackgroundEstimator::ring) pts.emplace_back(center.x() - kb, center.y());
    return pts;
  }
  if (est == BackgroundEstimator::point) {
    pts.emplace_back(center.x() + kb, center.y());
    return pts;
  }
  if (ring_samples < 1) throw DomainError("background: ring_samples must be positive");
  for (int m = 0; m < ring_samples; ++m) {
    const double phi = 2.0 * kPi * m / ring_samples;
    pts.emplace_back(center.x() + kb * std::cos(phi), center.y() + kb * std::sin(phi));
  }
  return pts;
}

inline RatioMeasurement make_ratio(double peak, double background) {
  if (!(background > 0.0)) throw DomainError("ratio: background intensity is not positive");
  return {peak, background, (peak - background) / background};
}

/// Ratio evaluated directly from the pattern (no pixelization).
inline RatioMeasurement pattern_ratio(const StateSummary& s, const EnsemblePositions& pos,
                                      std::span<const double> phases, double theta_b,
                                      BackgroundEstimator est = BackgroundEstimator::ring,
                                      int ring_samples = 64, const PatternOptions& opt = {},
                                      const Vec2& center = Vec2::Zero()) {
  check_pattern_inputs(s, pos);
  const bool linear = dimensionality(pos.geometry) == 1;
  const double peak = pattern_at(s, pos, phases, center, opt);
  const auto pts = background_points(pos.k0, theta_b, linear, est, ring_samples, center);
  double bg = 0.0;
  for (const auto& p : pts) bg += pattern_at(s, pos, phases, p, opt);
  return make_ratio(peak, bg / static_cast<double>(pts.size()));
}

/// Bilinear interpolation of an image at transverse wavevector kt.
inline double interpolate(const DiffractionImage& img, const Vec2& kt) {
  const auto& g = img.grid;
  auto locate = [](double k, double lo, double step, int n, const char* axis) {
    if (n == 1) {
      if (std::abs(k - lo) > 1e-9 * (1.0 + std::abs(lo))) {
        throw DomainError(std::string("interpolate: ") + axis + " outside single-row grid");
      }
      return std::pair<int, double>{0, 0.0};
    }
    const double u = (k - lo) / step;
    if (u < -1e-9 || u > n - 1 + 1e-9) {
      throw DomainError(std::string("interpolate: grid does not reach requested ") + axis);
    }
    const int i = std::clamp(static_cast<int>(std::floor(u)), 0, n - 2);
    return std::pair<int, double>{i, std::clamp(u - i, 0.0, 1.0)};
  };
  const auto [i, fx] = locate(kt.x(), g.kx_min, g.dkx(), g.nx, "k_x");
  const auto [j, fy] = locate(kt.y(), g.ky_min, g.dky(), g.ny, "k_y");
  const int i1 = g.nx > 1 ? i + 1 : i;
  const int j1 = g.ny > 1 ? j + 1 : j;
  return (1 - fx) * (1 - fy) * img.at(i, j) + fx * (1 - fy) * img.at(i1, j) +
         (1 - fx) * fy * img.at(i, j1) + fx * fy * img.at(i1, j1);
}

/// Ratio read from an image: forward value against the theta_b background.
inline RatioMeasurement peak_dip_ratio(const DiffractionImage& img, double theta_b,
                                       BackgroundEstimator est = BackgroundEstimator::ring,
                                       int ring_samples = 64) {
  const double peak = interpolate(img, Vec2::Zero());
  const auto pts = background_points(img.k0, theta_b, img.grid.is_line(), est, ring_samples);
  double bg = 0.0;
  for (const auto& p : pts) bg += interpolate(img, p);
  return make_ratio(peak, bg / static_cast<double>(pts.size()));
}

// ---------------------------------------------------------------------------
// Shot noise

enum class PhotonMeasure {
  solid_angle,  // pixel weight dk_x dk_y / (k0^2 cos theta)
  wavevector,   // pixel weight dk_x dk_y (detector linear in transverse wavevector)
};

inline std::vector<double> pixel_weights(const DiffractionImage& img, PhotonMeasure measure) {
  const auto& g = img.grid;
  const double area = (g.nx > 1 ? g.dkx() : 1.0) * (g.ny > 1 ? g.dky() : 1.0);
  std::vector<double> w(g.size(), area);
  if (measure == PhotonMeasure::solid_angle) {
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const double kt = std::hypot(g.kx(i), g.ky(j));
        const double c = std::cos(polar_angle(kt, img.k0));
        w[static_cast<std::size_t>(j) * g.nx + i] = c > 1e-12 ? area / c : 0.0;
      }
    }
  }
  return w;
}

/// Multinomial photon draw over the pixels with probabilities proportional to
/// intensity times pixel measure. The counts always sum to total_photons.
inline DiffractionImage photon_counts(const DiffractionImage& img, std::int64_t total_photons,
                                      std::uint64_t seed,
                                      PhotonMeasure measure = PhotonMeasure::solid_angle) {
  if (img.mode == ImageMode::counts) throw DomainError("photon_counts: input is already a counts image");
  if (total_photons < 0) throw DomainError("photon_counts: negative photon budget");
  DiffractionImage out = img;
  out.mode = ImageMode::counts;
  std::fill(out.values.begin(), out.values.end(), 0.0);
  if (total_photons == 0) return out;

  const auto w = pixel_weights(img, measure);
  std::vector<double> p(img.values.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::max(0.0, img.values[i]) * w[i];
    norm += p[i];
  }
  if (!(norm > 0.0)) throw DomainError("photon_counts: image has zero total intensity");

  // Conditional binomials in pixel order.
  Rng rng(seed);
  std::int64_t remaining = total_photons;
  double remaining_mass = norm;
  for (std::size_t i = 0; i < p.size() && remaining > 0; ++i) {
    if (p[i] <= 0.0) continue;
    const double prob = std::min(1.0, p[i] / remaining_mass);
    std::int64_t k = remaining;
    if (prob < 1.0) {
      std::binomial_distribution<std::int64_t> draw(remaining, prob);
      k = draw(rng);
    }
    out.values[i] = static_cast<double>(k);
    remaining -= k;
    remaining_mass -= p[i];
    if (remaining_mass <= 0.0) remaining_mass = 0.0;
  }
  if (remaining > 0) {
    // Rounding left mass on the table; give the rest to the last lit pixel.
    for (std::size_t i = p.size(); i-- > 0;) {
      if (p[i] > 0.0) {
        out.values[i] += static_cast<double>(remaining);
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Time-resolved collection

struct TimeRatio {
  double tau_c = 0.0;
  double ratio = 0.0;
};

/// Ratio of photons collected over [0, tau_c] under independent decay, where
/// n(dk, tau_c) = (1 - exp(-Gamma tau_c)) / Gamma * I_c(dk, 0). At tau_c = 0 the
/// ratio of the emission rates is reported.
inline std::vector<TimeRatio> time_resolved_ratio(const StateSummary& s, const EnsemblePositions& pos,
                                                  double gamma_rate, std::span<const double> tau_grid,
                                                  BackgroundEstimator est = BackgroundEstimator::ring,
                                                  int ring_samples = 64,
                                                  std::span<const double> phases = {},
                                                  const PatternOptions& opt = {}) {
  if (!(gamma_rate > 0.0)) throw DomainError("time_resolved_ratio: gamma_rate must be positive");
  const auto initial = pattern_ratio(s, pos, phases, boundary_angle(pos), est, ring_samples, opt);
  std::vector<TimeRatio> out;
  out.reserve(tau_grid.size());
  for (double tau : tau_grid) {
    if (tau < 0.0) throw DomainError("time_resolved_ratio: negative collection time");
    if (tau == 0.0) {
      out.push_back({tau, initial.ratio});
      continue;
    }
    const double collected = -std::expm1(-gamma_rate * tau) / gamma_rate;
    const double n_peak = collected * initial.peak;
    const double n_bg = collected * initial.background;
    out.push_back({tau, (n_peak - n_bg) / n_bg});
  }
  return out;
}

}  // namespace stokes
