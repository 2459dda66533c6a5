#pragma once

// Entanglement witnesses from (N, <N_s>, (Delta N_s)^2, P).
//
// Separable states satisfy
//   (a)  P <= (N - 1) (Delta N_s)^2
//   (b)  P >= -(Delta N_s)^2
//   (c)  (N - 1) P >= <N_s^2> - N <N_s>
// and violating any one of them certifies entanglement.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "stokes/core.hpp"
#include "stokes/spin_states.hpp"

namespace stokes {

inline constexpr double kViolationTolerance = 1e-12;

enum class Verdict { entangled, not_detected };

inline const char* verdict_name(Verdict v) {
  return v == Verdict::entangled ? "entangled" : "not-detected";
}

struct QualitativeFlags {
  bool vanishing_uncertainty_feature = false;  // Delta N_s = 0 with a peak or a dip
  bool maximum_uncertainty_dip = false;        // maximal Delta N_s with a dip
  bool half_excitation_threshold = false;      // |r| >= 1/2 dip or r > N(N-1)/(N+1) peak

  bool any() const {
    return vanishing_uncertainty_feature || maximum_uncertainty_dip || half_excitation_threshold;
  }
};

struct WitnessReport {
  bool violated_a = false, violated_b = false, violated_c = false;
  double margin_a = 0.0, margin_b = 0.0, margin_c = 0.0;  // positive = violated, units of P
  QualitativeFlags qualitative;
  Verdict verdict = Verdict::not_detected;

  bool any_violation() const { return violated_a || violated_b || violated_c; }
};

struct HalfExcitationThresholds {
  double dip = 0.5;
  double peak = 0.0;
};

/// Dip and peak ratio thresholds that certify entanglement of a
/// half-excitation state for any (Delta N_s).
inline HalfExcitationThresholds half_excitation_thresholds(int n_atoms) {
  if (n_atoms < 2) throw DomainError("half_excitation_thresholds: need N >= 2");
  const double n = n_atoms;
  return {0.5, n * (n - 1.0) / (n + 1.0)};
}

/// Forward readout r = P / (<N_s> - P/N).
inline double forward_ratio(double pair_sum, double ns_mean, int n_atoms) {
  const double denom = ns_mean - pair_sum / n_atoms;
  if (!(denom > 0.0)) throw DomainError("forward_ratio: background <N_s> - P/N is not positive");
  return pair_sum / denom;
}

/// Inverse of forward_ratio: P = r <N_s> / (1 + r/N).
inline double ratio_to_pair_sum(double ratio, double ns_mean, int n_atoms) {
  if (n_atoms < 2) throw DomainError("ratio_to_pair_sum: need N >= 2");
  const double n = n_atoms;
  const double denom = 1.0 + ratio / n;
  if (std::abs(denom) < 1e-15) throw DomainError("ratio_to_pair_sum: r = -N is a pole");
  const double p = ratio * ns_mean / denom;
  if (!(ns_mean - p / n > 0.0)) throw DomainError("ratio_to_pair_sum: background would be nonpositive");
  if (p < -n / 2.0 - 1e-9 || p > n * (n - 1.0) + 1e-9) {
    throw DomainError("ratio_to_pair_sum: P = " + std::to_string(p) + " outside physical bounds");
  }
  return p;
}

enum class UncertaintyClass { vanishing, maximum, generic };

/// The class a summary falls into within eps (on the variance).
inline UncertaintyClass classify_uncertainty(const StateSummary& s, double eps = 1e-9) {
  if (s.ns_var <= eps) return UncertaintyClass::vanishing;
  if (s.ns_var >= s.max_variance() - eps) return UncertaintyClass::maximum;
  return UncertaintyClass::generic;
}

/// Peak/dip rules for the two uncertainty limits, plus the half-excitation
/// ratio thresholds. Throws if the declared class does not match the summary.
inline QualitativeFlags qualitative_criteria(const StateSummary& s, UncertaintyClass declared,
                                             double eps = 1e-9) {
  if (declared == UncertaintyClass::vanishing && !(s.ns_var <= eps)) {
    throw DomainError("qualitative_criteria: declared vanishing uncertainty but variance is " +
                      std::to_string(s.ns_var));
  }
  if (declared == UncertaintyClass::maximum && !(s.ns_var >= s.max_variance() - eps)) {
    throw DomainError("qualitative_criteria: declared maximum uncertainty but variance " +
                      std::to_string(s.ns_var) + " < " + std::to_string(s.max_variance()));
  }
  QualitativeFlags f;
  // A class holds only within eps, so the feature must clear what a
  // separable state could show at that residual variance.
  const double n = s.n_atoms;
  const bool peak = s.pair_sum > (n - 1.0) * eps + kViolationTolerance;
  const bool dip = s.pair_sum < -eps - kViolationTolerance;
  f.vanishing_uncertainty_feature = declared == UncertaintyClass::vanishing && (peak || dip);
  f.maximum_uncertainty_dip = declared == UncertaintyClass::maximum && dip;

  if (s.n_atoms >= 2 && std::abs(s.ns_mean - s.n_atoms / 2.0) <= eps) {
    const double denom = s.ns_mean - s.pair_sum / s.n_atoms;
    if (denom > 0.0) {
      const double r = s.pair_sum / denom;
      const auto th = half_excitation_thresholds(s.n_atoms);
      // The in-plane coherent state sits exactly on the peak threshold, so
      // equality must not count.
      f.half_excitation_threshold = r <= -th.dip || r - th.peak > 1e-9 * th.peak;
    }
  }
  return f;
}

inline WitnessReport evaluate_sum_rules(const StateSummary& s, double tol = kViolationTolerance) {
  const double n = s.n_atoms;
  WitnessReport r;
  r.margin_a = s.pair_sum - (n - 1.0) * s.ns_var;
  r.margin_b = -s.ns_var - s.pair_sum;
  r.margin_c = (s.ns_second_moment() - n * s.ns_mean) - (n - 1.0) * s.pair_sum;
  r.violated_a = r.margin_a > tol;
  r.violated_b = r.margin_b > tol;
  r.violated_c = r.margin_c > tol;
  r.qualitative = qualitative_criteria(s, classify_uncertainty(s));
  r.verdict = r.any_violation() || r.qualitative.any() ? Verdict::entangled : Verdict::not_detected;
  return r;
}

// ---------------------------------------------------------------------------
// Tables

enum class Feature { peak, dip, none };

inline const char* feature_name(Feature f) {
  switch (f) {
    case Feature::peak: return "peak";
    case Feature::dip: return "dip";
    case Feature::none: return "none";
  }
  return "none";
}

struct DickeStrength {
  double j = 0.0;
  double m = 0.0;
  double pair_sum = 0.0;
  Feature feature = Feature::none;
};

/// P(J, M) = J(J+1) - M^2 - N/2 over every valid (J, M) pair of the two grids.
inline std::vector<DickeStrength> dicke_strength_map(int n_atoms, std::span<const double> j_grid,
                                                     std::span<const double> m_grid) {
  std::vector<DickeStrength> out;
  for (double j : j_grid) {
    for (double m : m_grid) {
      StateSummary s;
      try {
        s = dicke_summary(n_atoms, j, m);
      } catch (const DomainError&) {
        continue;
      }
      const Feature f = s.pair_sum > kViolationTolerance    ? Feature::peak
                        : s.pair_sum < -kViolationTolerance ? Feature::dip
                                                            : Feature::none;
      out.push_back({j, m, s.pair_sum, f});
    }
  }
  return out;
}

/// All allowed J (descending from N/2) or M values for N atoms.
inline std::vector<double> total_spin_values(int n_atoms) {
  std::vector<double> out;
  for (double j = n_atoms / 2.0; j >= -1e-12; j -= 1.0) out.push_back(std::abs(j) < 1e-12 ? 0.0 : j);
  return out;
}

inline std::vector<double> magnetic_values(int n_atoms) {
  std::vector<double> out;
  for (int k = 0; k <= n_atoms; ++k) out.push_back(k - n_atoms / 2.0);
  return out;
}

enum class PhaseLabel { none, violates_a, violates_b, violates_c, multiple, unphysical };

inline const char* phase_label_name(PhaseLabel l) {
  switch (l) {
    case PhaseLabel::none: return "none";
    case PhaseLabel::violates_a: return "2a-violated";
    case PhaseLabel::violates_b: return "2b-violated";
    case PhaseLabel::violates_c: return "2c-violated";
    case PhaseLabel::multiple: return "multiple";
    case PhaseLabel::unphysical: return "unphysical";
  }
  return "none";
}

struct PhaseCell {
  double ns_var = 0.0;
  double pair_sum = 0.0;
  bool violated_a = false, violated_b = false, violated_c = false;
  PhaseLabel label = PhaseLabel::none;
};

/// Classifies a (variance, P) slice at fixed <N_s>. Cells outside the
/// StateSummary bounds are labelled unphysical; that boundary is a superset
/// of the true physical region.
inline std::vector<PhaseCell> phase_diagram_grid(int n_atoms, double ns_mean, std::span<const double> var_grid,
                                                 std::span<const double> p_grid) {
  if (n_atoms < 2) throw DomainError("phase_diagram_grid: need N >= 2");
  std::vector<PhaseCell> out;
  out.reserve(var_grid.size() * p_grid.size());
  for (double var : var_grid) {
    for (double p : p_grid) {
      if (!std::isfinite(var) || !std::isfinite(p)) throw DomainError("phase_diagram_grid: grids must be finite");
      const StateSummary s{n_atoms, ns_mean, var, p};
      PhaseCell cell{var, p};
      const auto r = evaluate_sum_rules(s);
      cell.violated_a = r.violated_a;
      cell.violated_b = r.violated_b;
      cell.violated_c = r.violated_c;
      const int count = int(r.violated_a) + int(r.violated_b) + int(r.violated_c);
      if (!s.is_physical(1e-9)) {
        cell.label = PhaseLabel::unphysical;
      } else if (count > 1) {
        cell.label = PhaseLabel::multiple;
      } else if (r.violated_a) {
        cell.label = PhaseLabel::violates_a;
      } else if (r.violated_b) {
        cell.label = PhaseLabel::violates_b;
      } else if (r.violated_c) {
        cell.label = PhaseLabel::violates_c;
      }
      out.push_back(cell);
    }
  }
  return out;
}

}  // namespace stokes
