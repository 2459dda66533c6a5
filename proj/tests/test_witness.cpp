#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "stokes/exact_oracle.hpp"
#include "stokes/witness.hpp"

using namespace stokes;

TEST(SumRules, HalfExcitedDickeViolatesA) {
  const auto r = evaluate_sum_rules(dicke_summary(4, 2, 0));
  EXPECT_TRUE(r.violated_a);
  EXPECT_NEAR(r.margin_a, 4.0, 1e-15);
  EXPECT_EQ(r.verdict, Verdict::entangled);
}

TEST(SumRules, SingletViolatesB) {
  const auto r = evaluate_sum_rules({2, 1, 0, -1});
  EXPECT_TRUE(r.violated_b);
  EXPECT_NEAR(r.margin_b, 1.0, 1e-15);
  EXPECT_EQ(r.verdict, Verdict::entangled);
}

TEST(SumRules, CoherentStateSaturatesA) {
  const auto r = evaluate_sum_rules(coherent_summary(4, kPi / 2, 0));
  EXPECT_NEAR(r.margin_a, 0.0, 1e-12);
  EXPECT_FALSE(r.any_violation());
  EXPECT_FALSE(r.qualitative.any());
  EXPECT_EQ(r.verdict, Verdict::not_detected);
}

TEST(SumRules, MarginFormulas) {
  Rng rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = gen::summary(rng, gen::integer(rng, 2, 100));
    const double n = s.n_atoms;
    const auto r = evaluate_sum_rules(s);
    EXPECT_DOUBLE_EQ(r.margin_a, s.pair_sum - (n - 1) * s.ns_var);
    EXPECT_DOUBLE_EQ(r.margin_b, -s.ns_var - s.pair_sum);
    EXPECT_NEAR(r.margin_c, s.ns_var + s.ns_mean * s.ns_mean - n * s.ns_mean - (n - 1) * s.pair_sum,
                1e-9 * n * n);
    EXPECT_EQ(r.violated_a, r.margin_a > kViolationTolerance);
    EXPECT_EQ(r.violated_b, r.margin_b > kViolationTolerance);
    EXPECT_EQ(r.violated_c, r.margin_c > kViolationTolerance);
    EXPECT_EQ(r.verdict == Verdict::entangled, r.any_violation() || r.qualitative.any());
  }
}

TEST(SumRules, MarginsAreContinuous) {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = gen::summary(rng, gen::integer(rng, 2, 50));
    auto t = s;
    t.pair_sum += 1e-9;
    t.ns_var += 1e-9;
    const auto a = evaluate_sum_rules(s), b = evaluate_sum_rules(t);
    EXPECT_LT(std::abs(a.margin_a - b.margin_a), 1e-7);
    EXPECT_LT(std::abs(a.margin_b - b.margin_b), 1e-7);
    EXPECT_LT(std::abs(a.margin_c - b.margin_c), 1e-7);
  }
}

TEST(SumRules, NoFalsePositivesOnSeparableStates) {
  Rng rng(43);
  int flagged = 0;
  for (int trial = 0; trial < 4000; ++trial) {
    const int n = gen::integer(rng, 2, 6);
    const auto sep = gen::separable(rng, n);
    if (evaluate_sum_rules(sep.summary).verdict == Verdict::entangled) ++flagged;
  }
  EXPECT_EQ(flagged, 0);
}

TEST(SumRules, SeparableExtremesAreNotFlagged) {
  for (int n = 2; n <= 12; ++n) {
    EXPECT_EQ(evaluate_sum_rules(coherent_summary(n, kPi / 2, 0)).verdict, Verdict::not_detected) << n;
    EXPECT_EQ(evaluate_sum_rules(coherent_summary(n, 0, 0)).verdict, Verdict::not_detected);
    EXPECT_EQ(evaluate_sum_rules(coherent_summary(n, kPi, 0)).verdict, Verdict::not_detected);
    std::vector<MixtureComponent> cat{{0.5, coherent_summary(n, 0, 0)}, {0.5, coherent_summary(n, kPi, 0)}};
    EXPECT_EQ(evaluate_sum_rules(mixture_summary(cat)).verdict, Verdict::not_detected);
  }
}

TEST(Qualitative, Examples) {
  const auto v = qualitative_criteria({4, 2, 0, 4}, UncertaintyClass::vanishing);
  EXPECT_TRUE(v.vanishing_uncertainty_feature);
  const auto m = qualitative_criteria({4, 2, 4, -0.1}, UncertaintyClass::maximum);
  EXPECT_TRUE(m.maximum_uncertainty_dip);
  const auto peak = qualitative_criteria({4, 2, 4, 5}, UncertaintyClass::maximum);
  EXPECT_FALSE(peak.maximum_uncertainty_dip);
  EXPECT_FALSE(peak.vanishing_uncertainty_feature);
  EXPECT_FALSE(evaluate_sum_rules({4, 2, 4, 5}).violated_a);
}

TEST(Qualitative, InconsistentClassIsAnError) {
  EXPECT_THROW(qualitative_criteria({4, 2, 1, 0}, UncertaintyClass::vanishing), DomainError);
  EXPECT_THROW(qualitative_criteria({4, 2, 1, 0}, UncertaintyClass::maximum), DomainError);
  EXPECT_NO_THROW(qualitative_criteria({4, 2, 1, 0}, UncertaintyClass::generic));
}

TEST(Qualitative, ClassifyUncertainty) {
  EXPECT_EQ(classify_uncertainty({4, 2, 0, 0}), UncertaintyClass::vanishing);
  EXPECT_EQ(classify_uncertainty({4, 2, 4, 0}), UncertaintyClass::maximum);
  EXPECT_EQ(classify_uncertainty({4, 2, 2, 0}), UncertaintyClass::generic);
}

TEST(HalfExcitation, Thresholds) {
  EXPECT_EQ(half_excitation_thresholds(4).dip, 0.5);
  EXPECT_NEAR(half_excitation_thresholds(4).peak, 2.4, 1e-15);
  EXPECT_NEAR(half_excitation_thresholds(2).peak, 2.0 / 3.0, 1e-15);
  const double n = 1e6;
  EXPECT_NEAR(half_excitation_thresholds(1000000).peak / (n - 2), 1.0, 1e-6);
  EXPECT_THROW(half_excitation_thresholds(1), DomainError);
}

TEST(HalfExcitation, CoherentStateSitsOnPeakThreshold) {
  for (int n = 2; n <= 200; n += 2) {
    const auto s = coherent_summary(n, kPi / 2, 0);
    EXPECT_NEAR(forward_ratio(s.pair_sum, s.ns_mean, n), half_excitation_thresholds(n).peak, 1e-9 * n);
    EXPECT_FALSE(qualitative_criteria(s, UncertaintyClass::generic).half_excitation_threshold) << n;
  }
}

TEST(HalfExcitation, DipBeyondHalfFlags) {
  const int n = 100;
  const double p = ratio_to_pair_sum(-0.6, n / 2.0, n);
  EXPECT_TRUE(qualitative_criteria({n, n / 2.0, 10, p}, UncertaintyClass::generic).half_excitation_threshold);
  const double q = ratio_to_pair_sum(-0.4, n / 2.0, n);
  EXPECT_FALSE(qualitative_criteria({n, n / 2.0, 10, q}, UncertaintyClass::generic).half_excitation_threshold);
}

TEST(RatioInversion, Examples) {
  EXPECT_EQ(ratio_to_pair_sum(0.0, 2000, 4000), 0.0);
  EXPECT_NEAR(ratio_to_pair_sum(5.006, 2000, 4000), 10000, 1.0);
  EXPECT_NEAR(ratio_to_pair_sum(-0.6997, 2000, 4000), -1400, 0.5);
  EXPECT_THROW(ratio_to_pair_sum(-4000, 2000, 4000), DomainError);
  EXPECT_THROW(ratio_to_pair_sum(-5000, 2000, 4000), DomainError);
  EXPECT_THROW(ratio_to_pair_sum(1.0, 1, 1), DomainError);
}

TEST(RatioInversion, RoundTrip) {
  Rng rng(44);
  int checked = 0;
  while (checked < 500) {
    const int n = gen::integer(rng, 2, 5000);
    const double ns = gen::uniform(rng, 0.01, n);
    const double p = gen::uniform(rng, -n / 2.0, n * (n - 1.0));
    if (!(ns - p / n > 1e-6 * n)) continue;
    const double r = forward_ratio(p, ns, n);
    EXPECT_NEAR(ratio_to_pair_sum(r, ns, n), p, 1e-12 * std::max(1.0, std::abs(p)) * (1 + std::abs(r)));
    ++checked;
  }
}

TEST(DickeMap, ClosedFormAndFeatures) {
  const int n = 6;
  const auto cells = dicke_strength_map(n, total_spin_values(n), magnetic_values(n));
  int count = 0;
  for (const auto& c : cells) {
    EXPECT_DOUBLE_EQ(c.pair_sum, c.j * (c.j + 1) - c.m * c.m - n / 2.0);
    EXPECT_EQ(c.feature, c.pair_sum > 0 ? Feature::peak : c.pair_sum < 0 ? Feature::dip : Feature::none);
    ++count;
  }
  EXPECT_EQ(count, 16);  // (J, M) pairs for N = 6: 7 + 5 + 3 + 1
}

TEST(DickeMap, Extremes) {
  for (int n : {2, 4, 8, 20}) {
    const double half = n / 2.0;
    const std::vector<double> jm{half}, m0{0.0};
    const auto top = dicke_strength_map(n, jm, m0);
    ASSERT_EQ(top.size(), 1u);
    EXPECT_DOUBLE_EQ(top[0].pair_sum, n * n / 4.0);
    EXPECT_EQ(top[0].feature, Feature::peak);
    const std::vector<double> j0{0.0};
    const auto bottom = dicke_strength_map(n, j0, m0);
    ASSERT_EQ(bottom.size(), 1u);
    EXPECT_DOUBLE_EQ(bottom[0].pair_sum, -half);
    EXPECT_EQ(bottom[0].feature, Feature::dip);
  }
}

TEST(DickeMap, ZeroCurve) {
  // N = 4, J = 1: M^2 = J(J+1) - N/2 = 0 puts M = 0 on the boundary.
  const std::vector<double> j{1.0}, m{0.0};
  const auto cells = dicke_strength_map(4, j, m);
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].feature, Feature::none);
}

TEST(DickeMap, SymmetricColumnMatchesBruteForce) {
  for (int n = 2; n <= 8; ++n) {
    const std::vector<double> j{n / 2.0};
    const auto cells = dicke_strength_map(n, j, magnetic_values(n));
    for (const auto& c : cells) {
      const int k = static_cast<int>(std::lround(c.m + n / 2.0));
      EXPECT_NEAR(c.pair_sum, pair_correlation_sum(build_symmetric_dicke(n, k)), 1e-10);
    }
  }
}

TEST(PhaseDiagram, ZeroVarianceRow) {
  const int n = 10;
  const std::vector<double> var{0.0}, p{-4.0, -1.0, 0.0, 1.0, 30.0};
  const auto cells = phase_diagram_grid(n, 5.0, var, p);
  ASSERT_EQ(cells.size(), p.size());
  for (const auto& c : cells) {
    if (c.pair_sum > 0) {
      EXPECT_TRUE(c.violated_a);
      EXPECT_FALSE(c.violated_b);
    } else if (c.pair_sum < 0) {
      EXPECT_TRUE(c.violated_b);
      EXPECT_FALSE(c.violated_a);
    } else {
      EXPECT_EQ(c.label, PhaseLabel::none);
    }
    EXPECT_NE(c.label, PhaseLabel::unphysical);
  }
}

TEST(PhaseDiagram, ZeroPairColumnIsNone) {
  const std::vector<double> var{0.0, 1.0, 10.0, 25.0}, p{0.0};
  for (const auto& c : phase_diagram_grid(10, 5.0, var, p)) EXPECT_EQ(c.label, PhaseLabel::none);
}

TEST(PhaseDiagram, MaximumVarianceDipViolatesC) {
  const std::vector<double> var{25.0}, p{-3.0, -0.5};
  for (const auto& c : phase_diagram_grid(10, 5.0, var, p)) {
    EXPECT_TRUE(c.violated_c);
    EXPECT_FALSE(c.violated_a);
    EXPECT_FALSE(c.violated_b);
    EXPECT_EQ(c.label, PhaseLabel::violates_c);
  }
}

TEST(PhaseDiagram, UnphysicalCells) {
  const std::vector<double> var{30.0}, p{0.0};
  EXPECT_EQ(phase_diagram_grid(10, 5.0, var, p)[0].label, PhaseLabel::unphysical);
  const std::vector<double> v0{1.0}, low{-6.0};
  EXPECT_EQ(phase_diagram_grid(10, 5.0, v0, low)[0].label, PhaseLabel::unphysical);
  const std::vector<double> bad{std::nan("")};
  EXPECT_THROW(phase_diagram_grid(10, 5.0, bad, p), DomainError);
}
