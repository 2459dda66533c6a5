#pragma once

// Sufficient statistics of permutation-symmetric spin ensembles.
//
// Conventions: each atom is a two-level system {|g>, |s>}; sigma^- = |g><s|.
// The excitation number N_s counts atoms in |s>, so J_z = N_s - N/2 and
// <J_x^2> + <J_y^2> = P + N/2 with P the sum of transverse pair correlations.

#include <cmath>
#include <span>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "stokes/core.hpp"

namespace stokes {

struct StateSummary {
  int n_atoms = 0;
  double ns_mean = 0.0;  // <N_s>
  double ns_var = 0.0;   // (Delta N_s)^2
  double pair_sum = 0.0; // P = sum_{j != j'} <sigma+_j' sigma-_j>

  double ns_second_moment() const { return ns_var + ns_mean * ns_mean; }

  /// Largest variance a count bounded in [0, N] can have at this mean.
  double max_variance() const { return ns_mean * (n_atoms - ns_mean); }

  /// Empty string when all bounds hold within tol, otherwise the first violated bound.
  std::string bound_violation(double tol = 1e-9) const {
    const double n = n_atoms;
    std::ostringstream why;
    if (n_atoms < 1) {
      why << "n_atoms must be positive";
    } else if (ns_mean < -tol || ns_mean > n + tol) {
      why << "ns_mean " << ns_mean << " outside [0, " << n << "]";
    } else if (ns_var < -tol || ns_var > max_variance() + tol * (1.0 + n * n)) {
      why << "ns_var " << ns_var << " outside [0, " << max_variance() << "]";
    } else if (pair_sum < -n / 2.0 - tol || pair_sum > n * (n - 1.0) + tol) {
      why << "pair_sum " << pair_sum << " outside [" << -n / 2.0 << ", " << n * (n - 1.0) << "]";
    }
    return why.str();
  }

  bool is_physical(double tol = 1e-9) const { return bound_violation(tol).empty(); }

  friend bool operator==(const StateSummary&, const StateSummary&) = default;
};

/// Single-atom amplitudes (c_g, c_s) of |psi> = c_g|g> + c_s|s>.
struct SpinAmplitudes {
  Complex ground{1.0, 0.0};
  Complex excited{0.0, 0.0};

  double norm_squared() const { return std::norm(ground) + std::norm(excited); }

  /// Bloch-sphere parameterization; polar 0 is |g>.
  static SpinAmplitudes bloch(double polar, double azimuth) {
    return {Complex(std::cos(polar / 2.0), 0.0), std::polar(std::sin(polar / 2.0), azimuth)};
  }
};

namespace detail {

inline bool is_half_integer_multiple(double x) {
  const double twice = 2.0 * x;
  return std::abs(twice - std::round(twice)) < 1e-9;
}

inline bool differs_by_integer(double a, double b) {
  const double d = a - b;
  return std::abs(d - std::round(d)) < 1e-9;
}

}  // namespace detail

/// Statistics of the total-spin eigenstate |J, M>. They depend on (J, M) only,
/// so the result holds for every irrep with those quantum numbers.
inline StateSummary dicke_summary(int n_atoms, double j, double m) {
  if (n_atoms < 1) throw DomainError("dicke_summary: n_atoms must be positive");
  const double half_n = n_atoms / 2.0;
  if (!detail::is_half_integer_multiple(j) || !detail::is_half_integer_multiple(m) ||
      !detail::differs_by_integer(j, half_n) || !detail::differs_by_integer(m, half_n)) {
    throw DomainError("dicke_summary: J and M must differ from N/2 by integers");
  }
  if (j < -1e-12 || j > half_n + 1e-12) {
    throw DomainError("dicke_summary: J must lie in [0, N/2]");
  }
  if (std::abs(m) > j + 1e-12) throw DomainError("dicke_summary: |M| must not exceed J");
  return {n_atoms, m + half_n, 0.0, j * (j + 1.0) - m * m - half_n};
}

/// Spin-coherent (identical product) state at the given Bloch angles.
/// P does not depend on the azimuth.
inline StateSummary coherent_summary(int n_atoms, double polar, double /*azimuth*/) {
  if (n_atoms < 1) throw DomainError("coherent_summary: n_atoms must be positive");
  const double n = n_atoms;
  const double p = std::pow(std::sin(polar / 2.0), 2);
  const double q = std::pow(std::cos(polar / 2.0), 2);
  const double s = std::sin(polar);
  return {n_atoms, n * p, n * p * q, n * (n - 1.0) * s * s / 4.0};
}

/// Closed form for a product of arbitrary single-atom states:
/// P = |sum_j c_j|^2 - sum_j |c_j|^2 with c_j = <sigma^-_j> = conj(c_s) c_g.
inline StateSummary product_summary(std::span<const SpinAmplitudes> spins) {
  if (spins.empty()) throw DomainError("product_summary: no atoms");
  StateSummary out{static_cast<int>(spins.size()), 0.0, 0.0, 0.0};
  Complex coherence_sum{0.0, 0.0};
  double coherence_norms = 0.0;
  for (const auto& spin : spins) {
    const double norm = spin.norm_squared();
    if (std::abs(norm - 1.0) > 1e-10) throw DomainError("product_summary: unnormalized spin");
    const double p = std::norm(spin.excited);
    const Complex c = std::conj(spin.excited) * spin.ground;
    out.ns_mean += p;
    out.ns_var += p * (1.0 - p);
    coherence_sum += c;
    coherence_norms += std::norm(c);
  }
  out.pair_sum = std::norm(coherence_sum) - coherence_norms;
  return out;
}

/// Pair-correlation matrix of a product state: entry (a, b) is
/// <sigma+_a sigma-_b>, i.e. c_a conj(c_b) with c = <sigma+> off the diagonal
/// and p_a on it.
inline Eigen::MatrixXcd product_pair_correlations(std::span<const SpinAmplitudes> spins) {
  const auto n = static_cast<Eigen::Index>(spins.size());
  Eigen::VectorXcd c(n);
  Eigen::MatrixXcd out(n, n);
  for (Eigen::Index a = 0; a < n; ++a) c[a] = std::conj(spins[a].excited) * spins[a].ground;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      out(a, b) = a == b ? Complex(std::norm(spins[a].excited), 0.0) : c[a] * std::conj(c[b]);
    }
  }
  return out;
}

struct MixtureComponent {
  double weight = 0.0;
  StateSummary state;
};

/// Classical mixture. <N_s>, <N_s^2> and P mix linearly; the variance is
/// rebuilt from the mixed moments.
inline StateSummary mixture_summary(std::span<const MixtureComponent> components) {
  if (components.empty()) throw DomainError("mixture_summary: empty mixture");
  const int n = components.front().state.n_atoms;
  double total = 0.0, mean = 0.0, second = 0.0, pair = 0.0;
  for (const auto& c : components) {
    if (c.weight < 0.0) throw DomainError("mixture_summary: negative weight");
    if (c.state.n_atoms != n) throw DomainError("mixture_summary: components disagree on n_atoms");
    total += c.weight;
    mean += c.weight * c.state.ns_mean;
    second += c.weight * c.state.ns_second_moment();
    pair += c.weight * c.state.pair_sum;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw DomainError("mixture_summary: weights sum to " + std::to_string(total) + ", not 1");
  }
  return {n, mean, std::max(0.0, second - mean * mean), pair};
}

/// Homogeneous single-spin dephasing: pair correlations decay as exp(-2 gamma tau),
/// populations are untouched.
inline StateSummary apply_homogeneous_dephasing(const StateSummary& s, double gamma, double tau) {
  if (gamma < 0.0 || tau < 0.0) throw DomainError("dephasing: gamma and tau must be >= 0");
  StateSummary out = s;
  out.pair_sum = s.pair_sum * std::exp(-2.0 * gamma * tau);
  return out;
}

struct LaserConfig {
  double rabi_frequency = 0.0;        // Omega_L, rad/s
  double detuning = 0.0;              // Delta, rad/s
  double excited_linewidth = 0.0;     // Gamma_0, 1/s
  double wavevector_magnitude = 0.0;  // k_0, rad/m

  /// Adiabatic elimination wants Delta >> Omega_L and Delta >> Gamma_0.
  Warnings validate(double min_ratio = 10.0) const {
    if (rabi_frequency <= 0.0 || detuning <= 0.0 || excited_linewidth <= 0.0) {
      throw DomainError("laser: rabi_frequency, detuning and excited_linewidth must be positive");
    }
    Warnings w;
    if (detuning < min_ratio * rabi_frequency) {
      w.push_back("laser: detuning/rabi_frequency = " + std::to_string(detuning / rabi_frequency) +
                  " < " + std::to_string(min_ratio) + ", adiabatic elimination is marginal");
    }
    if (detuning < min_ratio * excited_linewidth) {
      w.push_back("laser: detuning/excited_linewidth = " +
                  std::to_string(detuning / excited_linewidth) + " < " + std::to_string(min_ratio) +
                  ", adiabatic elimination is marginal");
    }
    return w;
  }
};

/// Stokes emission rate Gamma = (Omega_L / 2 Delta)^2 Gamma_0.
inline double effective_scattering_rate(const LaserConfig& cfg) {
  if (cfg.rabi_frequency <= 0.0 || cfg.detuning <= 0.0 || cfg.excited_linewidth <= 0.0) {
    throw DomainError("effective_scattering_rate: parameters must be positive");
  }
  const double x = cfg.rabi_frequency / (2.0 * cfg.detuning);
  return x * x * cfg.excited_linewidth;
}

}  // namespace stokes
