#pragma once

// Closed forms against brute force on the full 2^N Hilbert space.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "stokes/diffraction.hpp"
#include "stokes/exact_oracle.hpp"
#include "stokes/rng.hpp"
#include "stokes/spin_states.hpp"
#include "stokes/witness.hpp"

namespace stokes {

struct OracleCheckOptions {
  int min_n = 2;
  int max_n = 6;
  int random_states = 200;  // per N, split between products and mixtures
  int pixels = 4;           // random wavevector transfers per state
  std::uint64_t seed = 1;
  double tolerance = 1e-9;
};

struct OracleCheckRow {
  int n_atoms = 0;
  std::string family;
  int states = 0;
  double summary_deviation = 0.0;  // max |closed form - brute force| over (<N_s>, var, P)
  double pixel_deviation = 0.0;    // max over pixel values
};

struct OracleCheckReport {
  std::vector<OracleCheckRow> rows;
  double max_deviation = 0.0;
  int states_checked = 0;
  bool pass = true;
};

namespace detail {

inline double summary_gap(const StateSummary& a, const StateSummary& b) {
  return std::max({std::abs(a.ns_mean - b.ns_mean), std::abs(a.ns_var - b.ns_var),
                   std::abs(a.pair_sum - b.pair_sum)});
}

inline SpinAmplitudes random_spin(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double polar = std::acos(1.0 - 2.0 * u(rng));
  const double azimuth = 2.0 * kPi * u(rng);
  const double global = 2.0 * kPi * u(rng);
  auto s = SpinAmplitudes::bloch(polar, azimuth);
  s.ground *= std::polar(1.0, global);
  s.excited *= std::polar(1.0, global);
  return s;
}

inline std::vector<Vec3> random_transfers(Rng& rng, double k0, int count) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> out;
  for (int i = 0; i < count; ++i) {
    const double kt = 0.9 * k0 * std::sqrt(u(rng));
    const double az = 2.0 * kPi * u(rng);
    out.push_back(transfer_vector(kt * std::cos(az), kt * std::sin(az), k0));
  }
  return out;
}

}  // namespace detail

inline OracleCheckReport run_oracle_check(const OracleCheckOptions& opt) {
  if (opt.min_n < 2 || opt.max_n > 8 || opt.min_n > opt.max_n) {
    throw DomainError("oracle-check: N range must lie within [2, 8]");
  }
  const double k0 = 2.0 * kPi / 780e-9;
  OracleCheckReport report;
  auto finish = [&](OracleCheckRow row) {
    report.max_deviation = std::max({report.max_deviation, row.summary_deviation, row.pixel_deviation});
    report.states_checked += row.states;
    report.rows.push_back(std::move(row));
  };

  for (int n = opt.min_n; n <= opt.max_n; ++n) {
    Rng rng(derive_seed(opt.seed, streams::oracle, static_cast<std::uint64_t>(n)));
    const auto pos = sample_positions(Gaussian2D{2e-6}, n, derive_seed(opt.seed, streams::positions, n), k0);

    // Dicke states: every valid (J, M); the symmetric ones also pixel by pixel.
    OracleCheckRow sym{n, "dicke-symmetric"}, dicke{n, "dicke"};
    for (double j : total_spin_values(n)) {
      for (double m = -j; m <= j + 1e-9; m += 1.0) {
        const auto closed = dicke_summary(n, j, m);
        const auto exact = build_dicke(n, j, m);
        const double gap = detail::summary_gap(closed, exact_summary(exact));
        const bool symmetric = std::abs(j - n / 2.0) < 1e-9;
        auto& row = symmetric ? sym : dicke;
        row.summary_deviation = std::max(row.summary_deviation, gap);
        ++row.states;
        if (symmetric) {
          for (const auto& dk : detail::random_transfers(rng, k0, opt.pixels)) {
            const double pix = pattern_value(closed, structure_term(pos, {}, dk));
            row.pixel_deviation = std::max(row.pixel_deviation, std::abs(pix - collective_intensity(exact, pos, dk)));
          }
        }
      }
    }
    finish(sym);
    if (dicke.states > 0) finish(dicke);

    // Random products, pixels via the closed-form pair correlations.
    const int products = (opt.random_states + 1) / 2;
    const int mixtures = opt.random_states / 2;
    OracleCheckRow prod{n, "product"};
    for (int s = 0; s < products; ++s) {
      std::vector<SpinAmplitudes> spins;
      for (int a = 0; a < n; ++a) spins.push_back(detail::random_spin(rng));
      const auto exact = build_product_state(spins);
      prod.summary_deviation =
          std::max(prod.summary_deviation, detail::summary_gap(product_summary(spins), exact_summary(exact)));
      const auto corr = product_pair_correlations(spins);
      for (const auto& dk : detail::random_transfers(rng, k0, opt.pixels)) {
        const double gap = std::abs(pattern_from_pair_correlations(corr, pos, dk) - collective_intensity(exact, pos, dk));
        prod.pixel_deviation = std::max(prod.pixel_deviation, gap);
      }
      ++prod.states;
    }
    finish(prod);

    // Classical mixtures of 2-3 random products.
    OracleCheckRow mixr{n, "mixture"};
    std::uniform_int_distribution<int> ncomp(2, 3);
    std::uniform_real_distribution<double> uw(0.05, 1.0);
    for (int s = 0; s < mixtures; ++s) {
      const int c = ncomp(rng);
      std::vector<double> w(c);
      double total = 0.0;
      for (auto& x : w) total += (x = uw(rng));
      for (auto& x : w) x /= total;
      w.back() = 1.0;
      for (int i = 0; i + 1 < c; ++i) w.back() -= w[i];

      std::vector<MixtureComponent> closed;
      std::vector<std::pair<double, ExactState>> brute;
      Eigen::MatrixXcd corr = Eigen::MatrixXcd::Zero(n, n);
      for (int i = 0; i < c; ++i) {
        std::vector<SpinAmplitudes> spins;
        for (int a = 0; a < n; ++a) spins.push_back(detail::random_spin(rng));
        closed.push_back({w[i], product_summary(spins)});
        brute.emplace_back(w[i], build_product_state(spins));
        corr += w[i] * product_pair_correlations(spins);
      }
      const auto exact = mix(brute);
      mixr.summary_deviation =
          std::max(mixr.summary_deviation, detail::summary_gap(mixture_summary(closed), exact_summary(exact)));
      for (const auto& dk : detail::random_transfers(rng, k0, opt.pixels)) {
        const double gap = std::abs(pattern_from_pair_correlations(corr, pos, dk) - collective_intensity(exact, pos, dk));
        mixr.pixel_deviation = std::max(mixr.pixel_deviation, gap);
      }
      ++mixr.states;
    }
    if (mixr.states > 0) finish(mixr);
  }
  report.pass = report.max_deviation < opt.tolerance;
  return report;
}

}  // namespace stokes
