#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "stokes/metrology.hpp"

using namespace stokes;

namespace {

const double kK0 = 2.0 * kPi / 780e-9;

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double std_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / (v.size() - 1));
}

/// Ensemble-averaged Gaussian peak with a known displacement.
struct PeakSetup {
  StateSummary s = coherent_summary(1000, kPi / 2, 0);
  EnsemblePositions pos = sample_positions(Gaussian2D{100e-6}, 1000, 5, kK0);
  GradientField field{Vec3(3000.0, -2000.0, 0.0), 1.0};
  PatternOptions opt;
  GridSpec grid;

  PeakSetup() {
    opt.model = StructureModel::ensemble_average;
    const double inv_sigma = 1.0 / fwhm_to_sigma(100e-6);
    grid = GridSpec::square(5.0 * inv_sigma, 41);
  }
};

}  // namespace

TEST(Imprint, ZeroGradientGivesZeroPhases) {
  const auto pos = sample_positions(Gaussian2D{10e-6}, 20, 1, kK0);
  for (double p : imprint_gradient(pos, {Vec3::Zero(), 1.0}).phases) EXPECT_EQ(p, 0.0);
}

TEST(Imprint, PhasesAreLinearInPosition) {
  Rng rng(51);
  const auto pos = sample_positions(Slab{10e-6, 10e-6}, 30, 1, kK0);
  for (int trial = 0; trial < 20; ++trial) {
    const GradientField f{Vec3(gen::uniform(rng, -1e4, 1e4), gen::uniform(rng, -1e4, 1e4), gen::uniform(rng, -1e4, 1e4)),
                          gen::uniform(rng, 0.1, 2.0)};
    const auto ph = imprint_gradient(pos, f).phases;
    for (int j = 0; j < pos.size(); ++j) EXPECT_DOUBLE_EQ(ph[j], f.tau0 * f.grad.dot(pos.coordinates[j]));
  }
}

TEST(Imprint, AngularDisplacement) {
  const GradientField f{Vec3(10.0, 0.0, 0.0), 1.0};
  EXPECT_NEAR(polar_angle(f.displacement().norm(), kK0), 1.24e-6, 0.005e-6);
  EXPECT_THROW(imprint_gradient(sample_positions(Gaussian2D{1e-6}, 4, 1, kK0), {Vec3(NAN, 0, 0), 1.0}),
               DomainError);
}

TEST(Imprint, DephasingWarnings) {
  EXPECT_TRUE(dephasing_warnings("tau0", 0.5, 1.0).empty());
  EXPECT_EQ(dephasing_warnings("tau0", 2.0, 1.0).size(), 1u);
}

TEST(FitPeak, NoiselessCenterWithinTenthOfPixel) {
  PeakSetup p;
  const auto run = run_gradiometer(p.s, p.pos, p.field, p.grid, 0, 1, p.opt);
  const Vec2 truth = p.field.displacement();
  EXPECT_EQ(run.fit.method, FitMethod::gaussian);
  EXPECT_LT(std::abs(run.fit.center.x() - truth.x()), 0.1 * p.grid.dkx());
  EXPECT_LT(std::abs(run.fit.center.y() - truth.y()), 0.1 * p.grid.dky());
  EXPECT_NEAR(run.estimate.estimated_grad.x(), 3000.0, 0.1 * p.grid.dkx());
}

TEST(FitPeak, DisplacementIsLinearInGradientAndTime) {
  PeakSetup p;
  for (double scale : {0.5, 1.0, 2.0}) {
    GradientField f{p.field.grad * scale, 1.0};
    GradientField g{p.field.grad, scale};
    const auto a = run_gradiometer(p.s, p.pos, f, p.grid, 0, 1, p.opt).fit.center;
    const auto b = run_gradiometer(p.s, p.pos, g, p.grid, 0, 1, p.opt).fit.center;
    EXPECT_LT((a - f.displacement()).norm(), 0.1 * p.grid.dkx());
    EXPECT_LT((a - b).norm(), 1e-6 * p.grid.dkx());
  }
}

TEST(FitPeak, LineGrid) {
  const double a = 512.0 / kK0;
  const auto pos = sample_positions(Gaussian1D{a}, 64, 3, kK0);
  const auto s = coherent_summary(64, kPi / 2, 0);
  const double inv_sigma = 1.0 / fwhm_to_sigma(a);
  const GradientField f{Vec3(0.7 * inv_sigma, 0, 0), 1.0};
  PatternOptions opt;
  opt.model = StructureModel::ensemble_average;
  const auto run = run_gradiometer(s, pos, f, GridSpec::line(-6 * inv_sigma, 6 * inv_sigma, 97), 0, 1, opt);
  EXPECT_LT(std::abs(run.fit.center.x() - f.displacement().x()), 0.1 * 12 * inv_sigma / 96);
  EXPECT_EQ(run.fit.center.y(), 0.0);
}

TEST(FitPeak, Errors) {
  DiffractionImage flat;
  flat.grid = GridSpec::square(1.0, 9);
  flat.values.assign(81, 3.0);
  EXPECT_THROW(fit_peak(flat), DomainError);

  PeakSetup p;
  const auto img = collective_pattern(p.s, p.pos, {}, p.grid, p.opt);
  const auto few = photon_counts(img, 10, 1);
  EXPECT_THROW(fit_peak(few), DomainError);

  auto neg = img;
  neg.values[3] = -1.0;
  EXPECT_THROW(fit_peak(neg), DomainError);
}

TEST(FitPeak, ShotNoiseIsUnbiasedAndCovarianceCalibrated) {
  PeakSetup p;
  std::vector<double> xs, ys, sx;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto run = run_gradiometer(p.s, p.pos, p.field, p.grid, 10000, seed, p.opt, PhotonMeasure::wavevector);
    xs.push_back(run.estimate.estimated_grad.x());
    ys.push_back(run.estimate.estimated_grad.y());
    sx.push_back(std::sqrt(run.estimate.covariance(0, 0)));
    EXPECT_EQ(run.counts.total(), 10000.0);
  }
  const double n = static_cast<double>(xs.size());
  EXPECT_LT(std::abs(mean_of(xs) - 3000.0), 3.0 * std_of(xs) / std::sqrt(n));
  EXPECT_LT(std::abs(mean_of(ys) + 2000.0), 3.0 * std_of(ys) / std::sqrt(n));
  EXPECT_NEAR(std_of(xs) / mean_of(sx), 1.0, 0.25);
}

TEST(EstimateGradient, RescalesByTau) {
  PeakFit fit;
  fit.center = Vec2(10.0, -4.0);
  fit.covariance << 4.0, 1.0, 1.0, 9.0;
  const auto e = estimate_gradient(fit, 2.0, 77);
  EXPECT_EQ(e.estimated_grad, Vec3(5.0, -2.0, 0.0));
  EXPECT_DOUBLE_EQ(e.covariance(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(e.covariance(1, 1), 2.25);
  EXPECT_EQ(e.photons_used, 77);
  EXPECT_THROW(estimate_gradient(fit, 0.0), DomainError);
  EXPECT_THROW(estimate_gradient(fit, -1.0), DomainError);
}

TEST(ReferenceSensitivities, Examples) {
  const double k0 = 8.06e6;
  const auto r = reference_sensitivities(10000, 1.0, 1e-3, k0);
  EXPECT_NEAR(r.diffraction, 8.98, 0.01);
  EXPECT_NEAR(r.sql_pairs, r.diffraction * 100.0, 1e-9);
  EXPECT_NEAR(reference_sensitivities(10000, 0.1, 1e-3, k0).mzi, 100.0, 1e-9);
  EXPECT_THROW(reference_sensitivities(0, 1.0, 1e-3, k0), DomainError);
  EXPECT_THROW(reference_sensitivities(10, 0.0, 1e-3, k0), DomainError);
}

TEST(FitLine, RecoversExactLine) {
  const std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
  const auto f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
  EXPECT_NEAR(f.rms_residual, 0.0, 1e-12);
  const std::vector<double> one{1.0};
  EXPECT_THROW(fit_line(one, one), NumericalError);
  const std::vector<double> same{2.0, 2.0};
  EXPECT_THROW(fit_line(same, same), NumericalError);
}

TEST(Sweep, Validation) {
  SweepConfig c;
  c.n_list = {7};
  EXPECT_THROW(c.validate(), DomainError);
  c.n_list = {1024};  // k0 A = 512
  EXPECT_THROW(c.validate(), DomainError);
  c.n_list = {8};
  c.trials = 1;
  EXPECT_THROW(c.validate(), DomainError);
  c.trials = 10;
  EXPECT_NO_THROW(c.validate());
}

TEST(Sweep, SmallRunIsUnbiasedAndScales) {
  SweepConfig c;
  c.n_list = {8, 32};
  c.trials = 30;
  c.shots = 500;
  const auto col = sensitivity_sweep(c);
  c.mode = ProbeMode::pairs;
  const auto pairs = sensitivity_sweep(c);
  ASSERT_EQ(col.rows.size(), 2u);
  for (const auto* r : {&col, &pairs}) {
    for (const auto& row : r->rows) {
      EXPECT_LT(std::abs(row.mean_estimate - 10.0), 4.0 * row.std_estimate / std::sqrt(row.trials));
    }
    EXPECT_LT(r->rows[1].std_estimate, r->rows[0].std_estimate);
  }
  // Collective peak strength N(N-1)/4 against N/4 for the pairs.
  for (std::size_t i = 0; i < 2; ++i) {
    const double n = col.rows[i].n_atoms;
    EXPECT_NEAR(pairs.rows[i].peak_strength, n / 4.0, 1e-12);
    EXPECT_NEAR(col.rows[i].peak_strength / (n * (n - 1) / 4.0), 1.0, 0.15);
  }
}

TEST(Sweep, SeedDeterministicAndThreadIndependent) {
  SweepConfig c;
  c.n_list = {8, 16};
  c.trials = 6;
  c.shots = 200;
  const auto a = sensitivity_sweep(c);
  c.threads = 3;
  const auto b = sensitivity_sweep(c);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].mean_estimate, b.rows[i].mean_estimate);
    EXPECT_EQ(a.rows[i].std_estimate, b.rows[i].std_estimate);
  }
  EXPECT_EQ(a.slope, b.slope);
}

TEST(Motion, FrozenAtZeroTemperature) {
  const auto pos = sample_positions(Gaussian2D{10e-6}, 50, 1, kK0);
  MotionParams m;
  EXPECT_EQ(simulate_motion(pos, m, 1e-3, 7).coordinates, pos.coordinates);
}

TEST(Motion, BallisticMeanSquareDisplacement) {
  const auto pos = sample_positions(Gaussian2D{10e-6}, 10000, 1, kK0);
  for (int dims : {2, 3}) {
    MotionParams m;
    m.temperature = 1e-6;
    m.dims = dims;
    const double tau = 1e-3;
    const auto moved = simulate_motion(pos, m, tau, 3);
    ASSERT_EQ(moved.size(), pos.size());
    double msd = 0.0;
    for (int j = 0; j < pos.size(); ++j) msd += (moved.coordinates[j] - pos.coordinates[j]).squaredNorm();
    msd /= pos.size();
    EXPECT_NEAR(msd / mean_square_displacement(m, tau), 1.0, 0.05);
  }
}

TEST(Motion, ClosedFormValues) {
  MotionParams m;
  m.temperature = 1e-6;
  m.dims = 2;
  EXPECT_NEAR(m.mass, 1.443e-25, 0.001e-25);
  EXPECT_NEAR(mean_square_displacement(m, 1e-3), 1.91e-10, 0.01e-10);
  EXPECT_NEAR(std::sqrt(mean_square_displacement(m, 1e-3)), 13.8e-6, 0.05e-6);
}

TEST(Motion, LangevinCrossover) {
  MotionParams m;
  m.temperature = 1e-6;
  m.model = MotionModel::langevin;
  m.collision_rate = 1e4;
  const double v2 = m.thermal_velocity_variance();
  // Short times are ballistic, long times diffusive with D = v2 / gamma.
  EXPECT_NEAR(mean_square_displacement(m, 1e-7) / (3 * v2 * 1e-14), 1.0, 1e-3);
  const double tau = 1.0;
  EXPECT_NEAR(mean_square_displacement(m, tau) / (3 * 2 * v2 / m.collision_rate * tau), 1.0, 1e-3);

  const auto pos = sample_positions(Gaussian2D{10e-6}, 10000, 1, kK0);
  for (double t : {1e-5, 1e-3, 1e-1}) {
    const auto moved = simulate_motion(pos, m, t, 9);
    double msd = 0.0;
    for (int j = 0; j < pos.size(); ++j) msd += (moved.coordinates[j] - pos.coordinates[j]).squaredNorm();
    EXPECT_NEAR(msd / pos.size() / mean_square_displacement(m, t), 1.0, 0.05) << t;
  }
}

TEST(Motion, LangevinDiffusiveLimitIsLinear) {
  // Raise the collision rate at fixed diffusivity: the msd approaches 2 D tau per axis.
  const double d = 1e-6;
  for (double gamma : {1e3, 1e5, 1e7}) {
    MotionParams m;
    m.model = MotionModel::langevin;
    m.collision_rate = gamma;
    m.temperature = d * gamma * m.mass / kBoltzmann;
    const double a = mean_square_displacement(m, 1e-2), b = mean_square_displacement(m, 2e-2);
    EXPECT_NEAR(b / a, 2.0, 2.0 / (gamma * 1e-2));
  }
}

TEST(Motion, NoiseFactorSeriesIsContinuous) {
  for (double x : {1e-2 - 1e-12, 1e-2}) {
    const double exact = 2 * x - 3 + 4 * std::exp(-x) - std::exp(-2 * x);
    EXPECT_NEAR(detail::ou_noise_factor(x) / exact, 1.0, 1e-6);
  }
}

TEST(Motion, DeterministicAndValidated) {
  const auto pos = sample_positions(Gaussian2D{10e-6}, 30, 1, kK0);
  MotionParams m;
  m.temperature = 2e-6;
  EXPECT_EQ(simulate_motion(pos, m, 1e-3, 5).coordinates, simulate_motion(pos, m, 1e-3, 5).coordinates);
  EXPECT_THROW(simulate_motion(pos, m, -1.0, 5), DomainError);
  m.temperature = -1.0;
  EXPECT_THROW(simulate_motion(pos, m, 1.0, 5), DomainError);
  m.temperature = 1e-6;
  m.model = MotionModel::langevin;
  EXPECT_THROW(simulate_motion(pos, m, 1.0, 5), DomainError);
  m.model = MotionModel::ballistic;
  m.dims = 4;
  EXPECT_THROW(simulate_motion(pos, m, 1.0, 5), DomainError);
}

TEST(Thermometry, FrozenAtomsGiveFlatCurve) {
  const int n = 200;
  const auto s = coherent_summary(n, kPi / 2, 0);
  const auto pos = sample_positions(Gaussian2D{100e-6}, n, 1, kK0);
  const std::vector<double> taus{0.0, 2e-4, 5e-4, 1e-3};
  MotionParams m;
  const auto c = thermometry_run(s, pos, Vec3(5e4, 0, 0), taus, m, 1);
  for (double v : c.peak_strengths) EXPECT_NEAR(v, n * n / 4.0, 1e-6 * n * n);
  EXPECT_NEAR(c.fitted_temperature, 0.0, 1e-15);
}

TEST(Thermometry, RecoversTemperature) {
  const int n = 1000;
  const auto s = coherent_summary(n, kPi / 2, 0);
  const auto pos = sample_positions(Gaussian2D{100e-6}, n, derive_seed(42, streams::positions, 0), kK0);
  MotionParams m;
  m.temperature = 1e-6;
  std::vector<double> taus;
  for (int i = 0; i < 12; ++i) taus.push_back(1e-3 * i / 11.0);
  const double g = std::sqrt(0.3 * m.dims / mean_square_displacement(m, 1e-3));
  const auto c = thermometry_run(s, pos, Vec3(g, 0, 0), taus, m, 42);
  EXPECT_TRUE(c.warnings.empty());
  EXPECT_NEAR(c.fitted_temperature / 1e-6, 1.0, 0.10);
  EXPECT_NEAR(c.fitted_msd_coefficient, 3 * c.fitted_temperature * kBoltzmann / m.mass, 1e-12);
  for (std::size_t i = 1; i < c.peak_strengths.size(); ++i) EXPECT_GE(c.peak_strengths[i], 0.0);
}

TEST(Thermometry, WarnsOnLargeExponentAndRejectsBadInput) {
  const int n = 100;
  const auto s = coherent_summary(n, kPi / 2, 0);
  const auto pos = sample_positions(Gaussian2D{100e-6}, n, 1, kK0);
  MotionParams m;
  m.temperature = 1e-6;
  const std::vector<double> taus{0.0, 1e-3};
  const double g = std::sqrt(0.8 * 3 / mean_square_displacement(m, 1e-3));
  EXPECT_FALSE(thermometry_run(s, pos, Vec3(g, 0, 0), taus, m, 1, 10.0).warnings.empty());
  EXPECT_THROW(thermometry_run(s, pos, Vec3::Zero(), taus, m, 1), DomainError);
  EXPECT_THROW(thermometry_run(s, pos, Vec3(1e4, 0, 0), std::vector<double>{0.0}, m, 1), DomainError);
  EXPECT_THROW(thermometry_run(s, pos, Vec3(1e4, 0, 0), std::vector<double>{1e-3, 0.0}, m, 1), DomainError);
  EXPECT_THROW(thermometry_run(coherent_summary(50, kPi / 2, 0), pos, Vec3(1e4, 0, 0), taus, m, 1), DomainError);
}

TEST(Thermometry, ThreadIndependent) {
  const int n = 300;
  const auto s = coherent_summary(n, kPi / 2, 0);
  const auto pos = sample_positions(Gaussian2D{100e-6}, n, 1, kK0);
  MotionParams m;
  m.temperature = 1e-6;
  std::vector<double> taus;
  for (int i = 0; i < 6; ++i) taus.push_back(2e-4 * i);
  const auto a = thermometry_run(s, pos, Vec3(5e4, 0, 0), taus, m, 4, 0.05, 1);
  const auto b = thermometry_run(s, pos, Vec3(5e4, 0, 0), taus, m, 4, 0.05, 3);
  EXPECT_EQ(a.peak_strengths, b.peak_strengths);
  EXPECT_EQ(a.fitted_temperature, b.fitted_temperature);
}
