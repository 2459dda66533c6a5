#pragma once

// Brute-force quantum mechanics for small spin ensembles.
//
// Basis states are indexed by an N-bit integer; bit j set means atom j is in
// |s>. Operators act matrix-free on that index, so pure-state expectations
// cost O(2^N) per single-atom operator and no 2^N x 2^N operator is formed.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stokes/core.hpp"
#include "stokes/diffraction.hpp"
#include "stokes/ensemble.hpp"
#include "stokes/parallel.hpp"
#include "stokes/spin_states.hpp"

namespace stokes {

inline constexpr int kMaxPureAtoms = 14;
inline constexpr int kMaxMixedAtoms = 10;

class ExactState {
 public:
  static ExactState pure(int n_atoms, std::vector<Complex> amplitudes) {
    check_size(n_atoms, kMaxPureAtoms);
    if (amplitudes.size() != (std::size_t{1} << n_atoms)) {
      throw DomainError("ExactState: amplitude vector must have length 2^N");
    }
    ExactState s(n_atoms, true, std::move(amplitudes));
    double norm = 0.0;
    for (const auto& a : s.data_) norm += std::norm(a);
    if (std::abs(norm - 1.0) > 1e-10) {
      throw DomainError("ExactState: state vector norm " + std::to_string(norm) + " is not 1");
    }
    return s;
  }

  /// Row-major density matrix. Trace and Hermiticity are checked here;
  /// positivity is checked by validate().
  static ExactState mixed(int n_atoms, std::vector<Complex> rho) {
    check_size(n_atoms, kMaxMixedAtoms);
    const std::size_t dim = std::size_t{1} << n_atoms;
    if (rho.size() != dim * dim) throw DomainError("ExactState: density matrix must be 2^N x 2^N");
    ExactState s(n_atoms, false, std::move(rho));
    if (std::abs(s.trace() - 1.0) > 1e-10) {
      throw DomainError("ExactState: density matrix trace " + std::to_string(s.trace()) + " is not 1");
    }
    if (s.hermiticity_error() > 1e-10) throw DomainError("ExactState: density matrix is not Hermitian");
    return s;
  }

  int n_atoms() const { return n_atoms_; }
  std::size_t dim() const { return std::size_t{1} << n_atoms_; }
  bool is_pure() const { return pure_; }

  std::span<const Complex> amplitudes() const {
    if (!pure_) throw DomainError("ExactState: amplitudes requested from a mixed state");
    return data_;
  }
  std::span<const Complex> density() const {
    if (pure_) throw DomainError("ExactState: density requested from a pure state");
    return data_;
  }

  /// rho_{ab} for either representation.
  Complex element(std::size_t a, std::size_t b) const {
    return pure_ ? data_[a] * std::conj(data_[b]) : data_[a * dim() + b];
  }

  ExactState to_mixed() const {
    if (!pure_) return *this;
    check_size(n_atoms_, kMaxMixedAtoms);
    const std::size_t d = dim();
    std::vector<Complex> rho(d * d);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) rho[a * d + b] = data_[a] * std::conj(data_[b]);
    return ExactState(n_atoms_, false, std::move(rho));
  }

  double trace() const {
    double t = 0.0;
    for (std::size_t a = 0; a < dim(); ++a) t += element(a, a).real();
    return t;
  }

  double hermiticity_error() const {
    if (pure_) return 0.0;
    double err = 0.0;
    const std::size_t d = dim();
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = a; b < d; ++b)
        err = std::max(err, std::abs(data_[a * d + b] - std::conj(data_[b * d + a])));
    return err;
  }

  double min_eigenvalue() const {
    if (pure_) return 0.0;
    const auto d = static_cast<Eigen::Index>(dim());
    Eigen::MatrixXcd m(d, d);
    for (Eigen::Index a = 0; a < d; ++a)
      for (Eigen::Index b = 0; b < d; ++b) m(a, b) = data_[a * d + b];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
  }

  /// Full invariant check: norm/trace, Hermiticity, positivity.
  void validate(double tol = 1e-10) const {
    if (std::abs(trace() - 1.0) > tol) throw DomainError("ExactState: trace is not 1");
    if (hermiticity_error() > tol) throw DomainError("ExactState: not Hermitian");
    if (min_eigenvalue() < -tol) throw DomainError("ExactState: negative eigenvalue");
  }

 private:
  ExactState(int n, bool pure, std::vector<Complex> data)
      : n_atoms_(n), pure_(pure), data_(std::move(data)) {}

  static void check_size(int n, int cap) {
    if (n < 1 || n > cap) {
      throw DomainError("ExactState: N = " + std::to_string(n) + " outside [1, " + std::to_string(cap) + "]");
    }
  }

  int n_atoms_;
  bool pure_;
  std::vector<Complex> data_;
};

inline std::size_t bit(int j) { return std::size_t{1} << j; }

// ---------------------------------------------------------------------------
// Constructors

inline ExactState build_product_state(std::span<const SpinAmplitudes> spins) {
  const int n = static_cast<int>(spins.size());
  if (n < 1 || n > kMaxPureAtoms) throw DomainError("build_product_state: unsupported atom count");
  for (const auto& s : spins) {
    if (std::abs(s.norm_squared() - 1.0) > 1e-10) {
      throw DomainError("build_product_state: single-spin amplitudes are not normalized");
    }
  }
  std::vector<Complex> amps(std::size_t{1} << n);
  for (std::size_t idx = 0; idx < amps.size(); ++idx) {
    Complex a{1.0, 0.0};
    for (int j = 0; j < n; ++j) a *= (idx & bit(j)) ? spins[j].excited : spins[j].ground;
    amps[idx] = a;
  }
  return ExactState::pure(n, std::move(amps));
}

inline ExactState build_product_state(int n_atoms, const SpinAmplitudes& shared) {
  if (n_atoms < 1) throw DomainError("build_product_state: n_atoms must be positive");
  const std::vector<SpinAmplitudes> spins(n_atoms, shared);
  return build_product_state(spins);
}

namespace detail {

inline std::vector<Complex> symmetric_dicke_amplitudes(int n, int k) {
  std::vector<Complex> amps(std::size_t{1} << n, Complex{});
  std::size_t count = 0;
  for (std::size_t idx = 0; idx < amps.size(); ++idx)
    if (std::popcount(idx) == k) ++count;
  const double a = 1.0 / std::sqrt(static_cast<double>(count));
  for (std::size_t idx = 0; idx < amps.size(); ++idx)
    if (std::popcount(idx) == k) amps[idx] = a;
  return amps;
}

}  // namespace detail

/// Equal-weight superposition of all basis states with k excitations (J = N/2).
inline ExactState build_symmetric_dicke(int n_atoms, int n_excitations) {
  if (n_atoms < 1 || n_atoms > kMaxPureAtoms) throw DomainError("build_symmetric_dicke: unsupported N");
  if (n_excitations < 0 || n_excitations > n_atoms) {
    throw DomainError("build_symmetric_dicke: excitation count outside [0, N]");
  }
  return ExactState::pure(n_atoms, detail::symmetric_dicke_amplitudes(n_atoms, n_excitations));
}

/// |J, M> realized as (N/2 - J) singlet pairs on atoms (0,1), (2,3), ...
/// tensored with the symmetric Dicke state of the remaining 2J atoms.
inline ExactState build_dicke(int n_atoms, double j, double m) {
  dicke_summary(n_atoms, j, m);  // validates quantum numbers
  if (n_atoms > kMaxPureAtoms) throw DomainError("build_dicke: unsupported N");
  const int pairs = static_cast<int>(std::lround(n_atoms / 2.0 - j));
  const int rest = n_atoms - 2 * pairs;
  const int k = static_cast<int>(std::lround(m + j));

  // Singlet block over the first 2*pairs atoms.
  std::vector<Complex> block{Complex{1.0, 0.0}};
  for (int p = 0; p < pairs; ++p) {
    std::vector<Complex> next(block.size() * 4, Complex{});
    const double h = 1.0 / std::sqrt(2.0);
    for (std::size_t idx = 0; idx < block.size(); ++idx) {
      next[idx | (std::size_t{2} * block.size())] += h * block[idx];  // |g s>
      next[idx | (std::size_t{1} * block.size())] -= h * block[idx];  // |s g>
    }
    block = std::move(next);
  }
  const auto tail = rest > 0 ? detail::symmetric_dicke_amplitudes(rest, k) : std::vector<Complex>{1.0};
  std::vector<Complex> amps(std::size_t{1} << n_atoms);
  for (std::size_t hi = 0; hi < tail.size(); ++hi)
    for (std::size_t lo = 0; lo < block.size(); ++lo) amps[(hi * block.size()) | lo] = tail[hi] * block[lo];
  return ExactState::pure(n_atoms, std::move(amps));
}

/// Classical mixture sum_i w_i rho_i.
inline ExactState mix(std::span<const std::pair<double, ExactState>> components) {
  if (components.empty()) throw DomainError("mix: empty mixture");
  const int n = components.front().second.n_atoms();
  const std::size_t d = std::size_t{1} << n;
  std::vector<Complex> rho(d * d, Complex{});
  double total = 0.0;
  for (const auto& [w, s] : components) {
    if (w < 0.0) throw DomainError("mix: negative weight");
    if (s.n_atoms() != n) throw DomainError("mix: components disagree on N");
    total += w;
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) rho[a * d + b] += w * s.element(a, b);
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("mix: weights do not sum to 1");
  return ExactState::mixed(n, std::move(rho));
}

// ---------------------------------------------------------------------------
// Expectation values

/// <sigma+_a sigma-_b> = Tr[sigma+_a sigma-_b rho]; the diagonal holds <n_a>.
inline Complex pair_correlation(const ExactState& state, int a, int b) {
  Complex sum{};
  const std::size_t d = state.dim();
  if (a == b) {
    for (std::size_t idx = 0; idx < d; ++idx)
      if (idx & bit(a)) sum += state.element(idx, idx);
    return sum;
  }
  // sigma+_a sigma-_b maps |idx> (b set, a clear) to |idx ^ b ^ a>.
  for (std::size_t idx = 0; idx < d; ++idx) {
    if ((idx & bit(b)) && !(idx & bit(a))) sum += state.element(idx, idx ^ bit(a) ^ bit(b));
  }
  return sum;
}

inline Eigen::MatrixXcd pair_correlation_matrix(const ExactState& state) {
  const int n = state.n_atoms();
  Eigen::MatrixXcd corr(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) corr(a, b) = pair_correlation(state, a, b);
  return corr;
}

/// P = sum_{j != j'} <sigma+_j' sigma-_j>, summed pair by pair.
inline double pair_correlation_sum(const ExactState& state) {
  Complex p{};
  for (int a = 0; a < state.n_atoms(); ++a)
    for (int b = 0; b < state.n_atoms(); ++b)
      if (a != b) p += pair_correlation(state, a, b);
  if (std::abs(p.imag()) > 1e-10 * (1.0 + std::abs(p.real()))) {
    throw NumericalError("pair_correlation_sum: imaginary residue " + std::to_string(p.imag()));
  }
  return p.real();
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// First two moments of the excitation number N_s.
inline Moments ns_moments(const ExactState& state) {
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t idx = 0; idx < state.dim(); ++idx) {
    const double p = state.element(idx, idx).real();
    const double k = std::popcount(idx);
    m1 += p * k;
    m2 += p * k * k;
  }
  return {m1, std::max(0.0, m2 - m1 * m1)};
}

inline StateSummary exact_summary(const ExactState& state) {
  const auto m = ns_moments(state);
  return {state.n_atoms(), m.mean, m.variance, pair_correlation_sum(state)};
}

/// I_c = Tr[J+(dk) J-(dk) rho] with J-(dk) = sum_j exp(-i dk.r_j) sigma-_j.
inline double collective_intensity(const ExactState& state, const EnsemblePositions& pos,
                                   const Vec3& dk) {
  const int n = state.n_atoms();
  if (pos.size() != n) throw DomainError("collective_intensity: positions do not match atom count");
  std::vector<Complex> phase(n);
  for (int j = 0; j < n; ++j) phase[j] = std::polar(1.0, -dk.dot(pos.coordinates[j]));
  const std::size_t d = state.dim();

  if (state.is_pure()) {
    const auto psi = state.amplitudes();
    std::vector<Complex> lowered(d, Complex{});
    for (std::size_t idx = 0; idx < d; ++idx) {
      if (psi[idx] == Complex{}) continue;
      for (int j = 0; j < n; ++j)
        if (idx & bit(j)) lowered[idx ^ bit(j)] += phase[j] * psi[idx];
    }
    double total = 0.0;
    for (const auto& a : lowered) total += std::norm(a);
    return total;
  }

  // Tr[J+ J- rho] = sum_c sum_{j,j' not in c} conj(e_j') e_j rho_{c|j, c|j'}
  Complex total{};
  for (std::size_t c = 0; c < d; ++c) {
    for (int j = 0; j < n; ++j) {
      if (c & bit(j)) continue;
      for (int jp = 0; jp < n; ++jp) {
        if (c & bit(jp)) continue;
        total += std::conj(phase[jp]) * phase[j] * state.element(c | bit(j), c | bit(jp));
      }
    }
  }
  return total.real();
}


// ---------------------------------------------------------------------------
// Independent-decay master equation
//
// d rho / dt = Gamma sum_j ( s-_j rho s+_j - {s+_j s-_j, rho} / 2 )

namespace detail {

inline void lindblad_rhs(int n, double gamma, const std::vector<Complex>& rho, std::vector<Complex>& out) {
  const std::size_t d = std::size_t{1} << n;
  for (std::size_t a = 0; a < d; ++a) {
    const int pa = std::popcount(a);
    for (std::size_t b = 0; b < d; ++b) {
      Complex v = -0.5 * gamma * (pa + std::popcount(b)) * rho[a * d + b];
      const std::size_t common_clear = ~(a | b) & (d - 1);
      for (int j = 0; j < n; ++j)
        if (common_clear & bit(j)) v += gamma * rho[(a | bit(j)) * d + (b | bit(j))];
      out[a * d + b] = v;
    }
  }
}

}  // namespace detail

struct LindbladOptions {
  /// Largest N * Gamma * h allowed for the fixed RK4 step h.
  double max_step_rate = 0.02;
  double trace_tolerance = 1e-8;
};

/// Density matrices at each requested time (times ascending, starting at 0).
inline std::vector<ExactState> lindblad_independent_decay(const ExactState& initial, double gamma_rate,
                                                          std::span<const double> times,
                                                          const LindbladOptions& opt = {}) {
  if (gamma_rate < 0.0) throw DomainError("lindblad: gamma_rate must be >= 0");
  if (times.empty()) return {};
  if (times.front() != 0.0) throw DomainError("lindblad: times must start at 0");
  if (!std::is_sorted(times.begin(), times.end())) throw DomainError("lindblad: times must be ascending");

  const ExactState start = initial.to_mixed();
  const int n = start.n_atoms();
  const std::size_t size = start.dim() * start.dim();
  std::vector<Complex> rho(start.density().begin(), start.density().end());
  std::vector<Complex> k1(size), k2(size), k3(size), k4(size), tmp(size);

  std::vector<ExactState> out;
  out.reserve(times.size());
  out.push_back(start);
  const double h_max = gamma_rate > 0.0 ? opt.max_step_rate / (n * gamma_rate) : 0.0;

  for (std::size_t t = 1; t < times.size(); ++t) {
    const double span = times[t] - times[t - 1];
    if (span > 0.0 && gamma_rate > 0.0) {
      const auto steps = static_cast<std::size_t>(std::ceil(span / h_max));
      const double h = span / static_cast<double>(steps);
      for (std::size_t s = 0; s < steps; ++s) {
        detail::lindblad_rhs(n, gamma_rate, rho, k1);
        for (std::size_t i = 0; i < size; ++i) tmp[i] = rho[i] + 0.5 * h * k1[i];
        detail::lindblad_rhs(n, gamma_rate, tmp, k2);
        for (std::size_t i = 0; i < size; ++i) tmp[i] = rho[i] + 0.5 * h * k2[i];
        detail::lindblad_rhs(n, gamma_rate, tmp, k3);
        for (std::size_t i = 0; i < size; ++i) tmp[i] = rho[i] + h * k3[i];
        detail::lindblad_rhs(n, gamma_rate, tmp, k4);
        for (std::size_t i = 0; i < size; ++i) rho[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      }
    }
    double tr = 0.0;
    for (std::size_t a = 0; a < start.dim(); ++a) tr += rho[a * start.dim() + a].real();
    if (std::abs(tr - 1.0) > opt.trace_tolerance) {
      throw NumericalError("lindblad: trace drifted to " + std::to_string(tr) + " at t = " +
                           std::to_string(times[t]) + "; reduce max_step_rate");
    }
    out.push_back(ExactState::mixed(n, rho));
  }
  return out;
}


/// I_s * I_c over a detector grid, evaluated on the exact state.
inline DiffractionImage emission_rate_pattern(const ExactState& state, const EnsemblePositions& pos,
                                              const GridSpec& grid, Envelope envelope = Envelope::identity,
                                              unsigned threads = 1) {
  grid.validate();
  DiffractionImage img;
  img.grid = grid;
  img.values.assign(grid.size(), 0.0);
  img.mode = ImageMode::fixed_positions;
  img.n_atoms = state.n_atoms();
  img.k0 = pos.k0;
  img.theta_b = boundary_angle(pos);
  parallel_for(grid.size(), threads, [&](std::size_t idx) {
    const int i = static_cast<int>(idx % grid.nx);
    const int j = static_cast<int>(idx / grid.nx);
    const Vec3 dk = transfer_vector(grid.kx(i), grid.ky(j), pos.k0);
    img.values[idx] = envelope_factor(envelope, dk, pos.k0) * collective_intensity(state, pos, dk);
  });
  return img;
}

}  // namespace stokes
