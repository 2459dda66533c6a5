#pragma once

// Atom positions, detector grids and image containers shared by the
// diffraction, oracle and metrology modules.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "stokes/core.hpp"
#include "stokes/rng.hpp"

namespace stokes {

/// FWHM of a Gaussian to its standard deviation.
inline double fwhm_to_sigma(double fwhm) { return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0))); }

struct Gaussian2D { double fwhm = 0.0; };  // x-y plane
struct Gaussian1D { double fwhm = 0.0; };  // along x
struct Slab {                              // uniform box
  double width = 0.0;   // A, transverse (x and y)
  double height = 0.0;  // H, along the laser axis z
};
struct Lattice {
  double spacing = 0.0;
  int dims = 3;
};

using Geometry = std::variant<Gaussian2D, Gaussian1D, Slab, Lattice>;

inline std::string geometry_name(const Geometry& g) {
  struct {
    std::string operator()(const Gaussian2D&) const { return "gaussian2d"; }
    std::string operator()(const Gaussian1D&) const { return "gaussian1d"; }
    std::string operator()(const Slab&) const { return "slab"; }
    std::string operator()(const Lattice&) const { return "lattice"; }
  } visitor;
  return std::visit(visitor, g);
}

/// Number of spatial dimensions the atoms spread over.
inline int dimensionality(const Geometry& g) {
  if (std::holds_alternative<Gaussian1D>(g)) return 1;
  if (std::holds_alternative<Gaussian2D>(g)) return 2;
  if (const auto* l = std::get_if<Lattice>(&g)) return l->dims;
  return 3;
}

inline int lattice_side(int n_atoms, int dims) {
  int side = 1;
  while (std::pow(side, dims) < n_atoms) ++side;
  return side;
}

/// Transverse size A of the ensemble for n_atoms atoms.
inline double transverse_size(const Geometry& g, int n_atoms) {
  if (const auto* p = std::get_if<Gaussian2D>(&g)) return p->fwhm;
  if (const auto* p = std::get_if<Gaussian1D>(&g)) return p->fwhm;
  if (const auto* p = std::get_if<Slab>(&g)) return p->width;
  const auto& l = std::get<Lattice>(g);
  return l.spacing * lattice_side(n_atoms, l.dims);
}

/// Longitudinal size H; absent for planar and linear ensembles.
inline std::optional<double> longitudinal_size(const Geometry& g, int n_atoms) {
  if (const auto* p = std::get_if<Slab>(&g)) return p->height;
  if (const auto* l = std::get_if<Lattice>(&g); l && l->dims == 3) {
    return l->spacing * lattice_side(n_atoms, 3);
  }
  return std::nullopt;
}

inline void validate_geometry(const Geometry& g) {
  struct {
    void operator()(const Gaussian2D& p) const { check(p.fwhm, "fwhm"); }
    void operator()(const Gaussian1D& p) const { check(p.fwhm, "fwhm"); }
    void operator()(const Slab& p) const {
      check(p.width, "width");
      check(p.height, "height");
    }
    void operator()(const Lattice& p) const {
      check(p.spacing, "spacing");
      if (p.dims < 1 || p.dims > 3) throw DomainError("lattice dims must be 1, 2 or 3");
    }
    static void check(double v, const char* what) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw DomainError(std::string("geometry: ") + what + " must be positive");
      }
    }
  } visitor;
  std::visit(visitor, g);
}

struct EnsemblePositions {
  std::vector<Vec3> coordinates;  // meters
  Geometry geometry;
  double k0 = 0.0;  // rad/m
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(coordinates.size()); }
  double transverse_size() const { return stokes::transverse_size(geometry, size()); }
  std::optional<double> longitudinal_size() const {
    return stokes::longitudinal_size(geometry, size());
  }
};

/// Dilute-regime checks (1D: N <= k0 A).
inline Warnings dilute_warnings(const EnsemblePositions& pos) {
  Warnings w;
  if (dimensionality(pos.geometry) == 1) {
    const double bound = pos.k0 * pos.transverse_size();
    if (pos.size() > bound) {
      w.push_back("ensemble: N = " + std::to_string(pos.size()) + " exceeds the 1D dilute bound k0*A = " +
                  std::to_string(bound));
    }
  }
  return w;
}

/// Deterministic for a fixed seed. Gaussian geometries are centred at the origin;
/// lattices fill the first n_atoms sites of a centred hypercubic grid.
inline EnsemblePositions sample_positions(const Geometry& geometry, int n_atoms, std::uint64_t seed,
                                          double k0) {
  validate_geometry(geometry);
  if (n_atoms < 2) throw DomainError("sample_positions: need at least 2 atoms");
  if (!(k0 > 0.0)) throw DomainError("sample_positions: k0 must be positive");

  EnsemblePositions out{{}, geometry, k0, seed};
  out.coordinates.reserve(n_atoms);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-0.5, 0.5);

  if (const auto* g = std::get_if<Gaussian2D>(&geometry)) {
    const double s = fwhm_to_sigma(g->fwhm);
    for (int i = 0; i < n_atoms; ++i) {
      const double x = s * normal(rng);
      const double y = s * normal(rng);
      out.coordinates.emplace_back(x, y, 0.0);
    }
  } else if (const auto* g = std::get_if<Gaussian1D>(&geometry)) {
    const double s = fwhm_to_sigma(g->fwhm);
    for (int i = 0; i < n_atoms; ++i) out.coordinates.emplace_back(s * normal(rng), 0.0, 0.0);
  } else if (const auto* g = std::get_if<Slab>(&geometry)) {
    for (int i = 0; i < n_atoms; ++i) {
      const double x = g->width * uniform(rng);
      const double y = g->width * uniform(rng);
      const double z = g->height * uniform(rng);
      out.coordinates.emplace_back(x, y, z);
    }
  } else {
    const auto& l = std::get<Lattice>(geometry);
    const int side = lattice_side(n_atoms, l.dims);
    const double offset = 0.5 * (side - 1);
    for (int i = 0; i < n_atoms; ++i) {
      Vec3 r = Vec3::Zero();
      int rest = i;
      for (int d = 0; d < l.dims; ++d) {
        r[d] = l.spacing * ((rest % side) - offset);
        rest /= side;
      }
      out.coordinates.push_back(r);
    }
  }
  return out;
}

/// Per-atom phases phi_j imprinted before emission.
struct PhaseProfile {
  std::vector<double> phases;  // radians
};

/// Rectangular grid over the transverse wavevector plane (k_x, k_y), rad/m.
/// A 1D detector is a grid with ny == 1 at k_y = ky_min.
struct GridSpec {
  double kx_min = 0.0, kx_max = 0.0;
  int nx = 1;
  double ky_min = 0.0, ky_max = 0.0;
  int ny = 1;

  static GridSpec square(double half_width, int n) {
    return {-half_width, half_width, n, -half_width, half_width, n};
  }
  static GridSpec line(double k_min, double k_max, int n) { return {k_min, k_max, n, 0.0, 0.0, 1}; }

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  bool is_line() const { return ny == 1; }
  double dkx() const { return nx > 1 ? (kx_max - kx_min) / (nx - 1) : 0.0; }
  double dky() const { return ny > 1 ? (ky_max - ky_min) / (ny - 1) : 0.0; }
  double kx(int i) const { return nx > 1 ? kx_min + i * dkx() : kx_min; }
  double ky(int j) const { return ny > 1 ? ky_min + j * dky() : ky_min; }

  void validate() const {
    if (nx < 1 || ny < 1) throw DomainError("grid: pixel counts must be positive");
    if (nx > 1 && !(kx_max > kx_min)) throw DomainError("grid: kx_max must exceed kx_min");
    if (ny > 1 && !(ky_max > ky_min)) throw DomainError("grid: ky_max must exceed ky_min");
  }
};

/// Wavevector transfer for an emitted photon with transverse components
/// (kx, ky): Delta k = k - k0 z_hat with |k| = k0.
inline Vec3 transfer_vector(double kx, double ky, double k0) {
  const double kt2 = kx * kx + ky * ky;
  if (kt2 > k0 * k0 * (1.0 + 1e-12)) {
    throw DomainError("transfer_vector: transverse wavevector exceeds k0");
  }
  const double kz = std::sqrt(std::max(0.0, k0 * k0 - kt2));
  return {kx, ky, kz - k0};
}

/// Emission polar angle for transverse wavevector magnitude kt.
inline double polar_angle(double kt, double k0) { return std::asin(std::min(1.0, kt / k0)); }

enum class ImageMode { analytic, fixed_positions, counts };

inline std::string image_mode_name(ImageMode m) {
  switch (m) {
    case ImageMode::analytic: return "analytic";
    case ImageMode::fixed_positions: return "fixed-positions";
    case ImageMode::counts: return "counts";
  }
  return "unknown";
}

/// Row-major (ky outer, kx inner). In counts mode the values are integers.
struct DiffractionImage {
  GridSpec grid;
  std::vector<double> values;
  ImageMode mode = ImageMode::fixed_positions;
  int n_atoms = 0;
  double k0 = 0.0;
  double theta_b = 0.0;
  std::size_t clipped_pixels = 0;

  double& at(int i, int j) { return values[static_cast<std::size_t>(j) * grid.nx + i]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * grid.nx + i]; }

  double total() const {
    double t = 0.0;
    for (double v : values) t += v;
    return t;
  }
};

}  // namespace stokes
