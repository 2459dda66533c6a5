#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "stokes/exact_oracle.hpp"
#include "stokes/spin_states.hpp"

using namespace stokes;

namespace {

void expect_summary(const StateSummary& s, double mean, double var, double p, double tol = 1e-12) {
  EXPECT_NEAR(s.ns_mean, mean, tol);
  EXPECT_NEAR(s.ns_var, var, tol);
  EXPECT_NEAR(s.pair_sum, p, tol);
}

}  // namespace

TEST(DickeSummary, HalfExcitedSymmetric) { expect_summary(dicke_summary(4, 2, 0), 2, 0, 4); }

TEST(DickeSummary, TwoSpinSinglet) { expect_summary(dicke_summary(2, 0, 0), 1, 0, -1); }

TEST(DickeSummary, FullyExcitedHasNoPairs) { expect_summary(dicke_summary(4, 2, 2), 4, 0, 0); }

TEST(DickeSummary, RejectsInvalidQuantumNumbers) {
  EXPECT_THROW(dicke_summary(4, 3, 0), DomainError);     // J > N/2
  EXPECT_THROW(dicke_summary(4, 1, 2), DomainError);     // |M| > J
  EXPECT_THROW(dicke_summary(4, 1.5, 0.5), DomainError); // wrong parity
  EXPECT_THROW(dicke_summary(3, 1, 0), DomainError);
  EXPECT_THROW(dicke_summary(4, 2, 0.3), DomainError);
  EXPECT_THROW(dicke_summary(0, 0, 0), DomainError);
}

TEST(DickeSummary, MatchesBruteForceForEveryConstructibleState) {
  for (int n = 1; n <= 8; ++n) {
    for (double j : total_spin_values(n)) {
      for (double m = -j; m <= j + 1e-9; m += 1.0) {
        const auto closed = dicke_summary(n, j, m);
        const auto exact = exact_summary(build_dicke(n, j, m));
        expect_summary(exact, closed.ns_mean, closed.ns_var, closed.pair_sum, 1e-10);
      }
    }
  }
}

TEST(CoherentSummary, EquatorialFourAtoms) { expect_summary(coherent_summary(4, kPi / 2, 0), 2, 1, 3); }

TEST(CoherentSummary, AllGround) {
  for (double az : {0.0, 0.7, 3.0}) expect_summary(coherent_summary(10, 0, az), 0, 0, 0);
}

TEST(CoherentSummary, AzimuthIndependent) { expect_summary(coherent_summary(2, kPi / 2, 1.3), 1, 0.5, 0.5); }

TEST(CoherentSummary, MatchesBruteForce) {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = gen::integer(rng, 1, 7);
    const double polar = gen::uniform(rng, 0, kPi), az = gen::uniform(rng, 0, 2 * kPi);
    const auto exact = exact_summary(build_product_state(n, SpinAmplitudes::bloch(polar, az)));
    const auto closed = coherent_summary(n, polar, az);
    expect_summary(exact, closed.ns_mean, closed.ns_var, closed.pair_sum, 1e-10);
  }
}

TEST(ProductSummary, MatchesBruteForce) {
  Rng rng(12);
  for (int trial = 0; trial < 60; ++trial) {
    const auto spins = gen::spins(rng, gen::integer(rng, 1, 8));
    const auto closed = product_summary(spins);
    const auto exact = exact_summary(build_product_state(spins));
    expect_summary(exact, closed.ns_mean, closed.ns_var, closed.pair_sum, 1e-10);
  }
}

TEST(ProductSummary, RejectsUnnormalizedSpin) {
  std::vector<SpinAmplitudes> spins{{Complex(1, 0), Complex(1, 0)}};
  EXPECT_THROW(product_summary(spins), DomainError);
  EXPECT_THROW(product_summary(std::vector<SpinAmplitudes>{}), DomainError);
}

TEST(ProductPairCorrelations, MatchesBruteForceMatrix) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const auto spins = gen::spins(rng, gen::integer(rng, 2, 6));
    const auto closed = product_pair_correlations(spins);
    const auto exact = pair_correlation_matrix(build_product_state(spins));
    EXPECT_LT((closed - exact).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(MixtureSummary, Singleton) {
  const StateSummary s{5, 1.5, 0.7, 2.0};
  std::vector<MixtureComponent> mix{{1.0, s}};
  expect_summary(mixture_summary(mix), s.ns_mean, s.ns_var, s.pair_sum);
}

TEST(MixtureSummary, TwoPointExcitationDistribution) {
  std::vector<MixtureComponent> mix{{0.5, dicke_summary(4, 2, 2)}, {0.5, dicke_summary(4, 2, -2)}};
  expect_summary(mixture_summary(mix), 2, 4, 0);
}

TEST(MixtureSummary, PairSumMixesLinearly) {
  std::vector<MixtureComponent> parts{{0.3, dicke_summary(4, 2, 0)}, {0.7, dicke_summary(4, 1, 0)}};
  expect_summary(mixture_summary(parts), 2, 0, 1.2);

  std::vector<std::pair<double, ExactState>> brute{{0.3, build_dicke(4, 2, 0)}, {0.7, build_dicke(4, 1, 0)}};
  expect_summary(exact_summary(stokes::mix(brute)), 2, 0, 1.2, 1e-10);
}

TEST(MixtureSummary, Errors) {
  std::vector<MixtureComponent> bad_weights{{0.4, dicke_summary(4, 2, 0)}, {0.4, dicke_summary(4, 2, 1)}};
  EXPECT_THROW(mixture_summary(bad_weights), DomainError);
  std::vector<MixtureComponent> bad_n{{0.5, dicke_summary(4, 2, 0)}, {0.5, dicke_summary(2, 1, 0)}};
  EXPECT_THROW(mixture_summary(bad_n), DomainError);
  std::vector<MixtureComponent> negative{{1.5, dicke_summary(4, 2, 0)}, {-0.5, dicke_summary(4, 2, 1)}};
  EXPECT_THROW(mixture_summary(negative), DomainError);
  EXPECT_THROW(mixture_summary(std::vector<MixtureComponent>{}), DomainError);
}

TEST(MixtureSummary, AffineInPairSum) {
  Rng rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = gen::integer(rng, 2, 20);
    const int c = gen::integer(rng, 1, 5);
    const auto w = gen::weights(rng, c);
    std::vector<MixtureComponent> mix;
    double expected = 0.0;
    for (int i = 0; i < c; ++i) {
      const auto [j, m] = gen::dicke_numbers(rng, n);
      mix.push_back({w[i], dicke_summary(n, j, m)});
      expected += w[i] * mix.back().state.pair_sum;
    }
    EXPECT_NEAR(mixture_summary(mix).pair_sum, expected, 1e-12 * (1 + std::abs(expected)));
  }
}

TEST(Dephasing, Examples) {
  const StateSummary s{4, 2, 0, 4};
  EXPECT_EQ(apply_homogeneous_dephasing(s, 0.0, 123.0).pair_sum, 4.0);
  EXPECT_NEAR(apply_homogeneous_dephasing(s, 1.0, 0.5).pair_sum, 4.0 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(apply_homogeneous_dephasing(s, 1.0, 0.5).pair_sum, 1.4715, 1e-4);
  const StateSummary singlet{2, 1, 0, -1};
  EXPECT_NEAR(apply_homogeneous_dephasing(singlet, 2.0, 1.0).pair_sum, -0.01832, 1e-5);
  EXPECT_THROW(apply_homogeneous_dephasing(s, -1.0, 1.0), DomainError);
}

TEST(Dephasing, PopulationsUntouched) {
  const StateSummary s{6, 2.5, 1.25, 3.0};
  const auto d = apply_homogeneous_dephasing(s, 0.3, 2.0);
  EXPECT_EQ(d.ns_mean, s.ns_mean);
  EXPECT_EQ(d.ns_var, s.ns_var);
}

TEST(Dephasing, Composes) {
  Rng rng(15);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = gen::summary(rng, gen::integer(rng, 2, 50));
    const double g = gen::uniform(rng, 0, 3), t1 = gen::uniform(rng, 0, 2), t2 = gen::uniform(rng, 0, 2);
    const double twice = apply_homogeneous_dephasing(apply_homogeneous_dephasing(s, g, t1), g, t2).pair_sum;
    const double once = apply_homogeneous_dephasing(s, g, t1 + t2).pair_sum;
    EXPECT_NEAR(twice, once, 1e-12 * (1 + std::abs(once)));
  }
}

TEST(ScatteringRate, Examples) {
  // (Omega/2 Delta)^2 = 1/40 and Gamma_0 = 30 per microsecond.
  LaserConfig a{2.0 / std::sqrt(40.0), 1.0, 30e6, 1.0};
  EXPECT_NEAR(effective_scattering_rate(a), 0.75e6, 1e-6);
  EXPECT_NEAR(1.0 / effective_scattering_rate(a), 1.333e-6, 1e-9);
  LaserConfig b{2.0, 1.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(effective_scattering_rate(b), 1.0);
  LaserConfig c{2.0 * std::sqrt(0.1), 1.0, 1e7, 1.0};
  EXPECT_NEAR(effective_scattering_rate(c), 1e6, 1e-6);
  EXPECT_THROW(effective_scattering_rate(LaserConfig{0.0, 1.0, 1.0, 1.0}), DomainError);
  EXPECT_THROW(effective_scattering_rate(LaserConfig{1.0, -1.0, 1.0, 1.0}), DomainError);
}

TEST(LaserConfig, AdiabaticEliminationWarnings) {
  EXPECT_TRUE(LaserConfig({1.0, 100.0, 1.0, 1.0}).validate().empty());
  EXPECT_EQ(LaserConfig({1.0, 5.0, 1.0, 1.0}).validate().size(), 2u);
  EXPECT_EQ(LaserConfig({1.0, 50.0, 10.0, 1.0}).validate().size(), 1u);
}

TEST(StateSummary, ConstructorsStayInBounds) {
  Rng rng(16);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = gen::integer(rng, 1, 40);
    const auto [j, m] = gen::dicke_numbers(rng, n);
    EXPECT_TRUE(dicke_summary(n, j, m).is_physical()) << n << ' ' << j << ' ' << m;
    EXPECT_TRUE(coherent_summary(n, gen::uniform(rng, 0, kPi), 0).is_physical());
    EXPECT_TRUE(product_summary(gen::spins(rng, n)).is_physical());
    EXPECT_TRUE(gen::separable(rng, n).summary.is_physical());
  }
}

TEST(StateSummary, BoundViolationNamesTheBound) {
  EXPECT_NE(StateSummary({4, 5, 0, 0}).bound_violation().find("ns_mean"), std::string::npos);
  EXPECT_NE(StateSummary({4, 2, 5, 0}).bound_violation().find("ns_var"), std::string::npos);
  EXPECT_NE(StateSummary({4, 2, 0, -3}).bound_violation().find("pair_sum"), std::string::npos);
  EXPECT_TRUE(StateSummary({4, 2, 4, 12}).is_physical());
}
