#pragma once

// Gaussian-plus-background peak fit for counts images.
//
// Model mu(k) = A exp(-|k - c|^2 / (2 w^2)) + B, isotropic in the transverse
// wavevector plane (1D along k_x for single-row images). Each step solves the
// Poisson-weighted normal equations (weights 1/mu, recomputed every
// iteration) with Levenberg damping, so the fixed point is the Poisson
// maximum-likelihood fit and (J^T W J)^{-1} is its covariance.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "stokes/core.hpp"
#include "stokes/ensemble.hpp"

namespace stokes {

enum class FitMethod { gaussian, centroid };

struct PeakFitOptions {
  int max_iterations = 200;
  double min_counts = 20.0;
  double tolerance = 1e-10;  // relative change of the Poisson deviance
};

struct PeakFit {
  Vec2 center = Vec2::Zero();        // rad/m
  Mat2 covariance = Mat2::Zero();    // (rad/m)^2
  double amplitude = 0.0;
  double width = 0.0;                // rad/m
  double background = 0.0;
  double residual = 0.0;             // Poisson deviance per degree of freedom
  int iterations = 0;
  bool converged = false;
  FitMethod method = FitMethod::gaussian;
};

namespace detail {

struct FitProblem {
  std::vector<double> u, v, n;  // pixel coordinates (scaled k) and data
  bool line = false;
  double scale = 1.0;           // rad/m per unit of u, v
  double origin_x = 0.0, origin_y = 0.0;

  int n_params() const { return line ? 4 : 5; }
};

// params: A, cu, [cv], w, B
inline void model_and_jacobian(const FitProblem& fp, const Eigen::VectorXd& p, Eigen::VectorXd& mu,
                               Eigen::MatrixXd& jac) {
  const auto m = static_cast<Eigen::Index>(fp.n.size());
  const int np = fp.n_params();
  mu.resize(m);
  jac.resize(m, np);
  const double a = p[0], cu = p[1];
  const double cv = fp.line ? 0.0 : p[2];
  const double w = p[np - 2], b = p[np - 1];
  for (Eigen::Index i = 0; i < m; ++i) {
    const double du = fp.u[i] - cu;
    const double dv = fp.line ? 0.0 : fp.v[i] - cv;
    const double r2 = du * du + dv * dv;
    const double g = std::exp(-r2 / (2.0 * w * w));
    mu[i] = a * g + b;
    jac(i, 0) = g;
    jac(i, 1) = a * g * du / (w * w);
    if (!fp.line) jac(i, 2) = a * g * dv / (w * w);
    jac(i, np - 2) = a * g * r2 / (w * w * w);
    jac(i, np - 1) = 1.0;
  }
}

inline double deviance(const FitProblem& fp, const Eigen::VectorXd& mu) {
  double d = 0.0;
  for (std::size_t i = 0; i < fp.n.size(); ++i) {
    const double n = fp.n[i], m = mu[static_cast<Eigen::Index>(i)];
    d += 2.0 * (m - n + (n > 0.0 ? n * std::log(n / m) : 0.0));
  }
  return d;
}

inline PeakFit centroid_fit(const FitProblem& fp, double background) {
  double sw = 0.0, su = 0.0, sv = 0.0;
  for (std::size_t i = 0; i < fp.n.size(); ++i) {
    const double w = std::max(0.0, fp.n[i] - background);
    sw += w;
    su += w * fp.u[i];
    sv += w * fp.v[i];
  }
  if (!(sw > 0.0)) throw DomainError("fit_peak: no signal above background");
  const double cu = su / sw, cv = sv / sw;
  double vu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < fp.n.size(); ++i) {
    const double w = std::max(0.0, fp.n[i] - background);
    vu += w * (fp.u[i] - cu) * (fp.u[i] - cu);
    vv += w * (fp.v[i] - cv) * (fp.v[i] - cv);
  }
  PeakFit out;
  out.method = FitMethod::centroid;
  out.center = {fp.origin_x + cu * fp.scale, fp.origin_y + cv * fp.scale};
  out.covariance(0, 0) = vu / (sw * sw) * fp.scale * fp.scale;
  out.covariance(1, 1) = fp.line ? 0.0 : vv / (sw * sw) * fp.scale * fp.scale;
  out.background = background;
  out.width = std::sqrt(vu / sw) * fp.scale;
  return out;
}

}  // namespace detail

inline PeakFit fit_peak(const DiffractionImage& img, const PeakFitOptions& opt = {}) {
  const auto& g = img.grid;
  if (g.nx < 3) throw DomainError("fit_peak: image too small");
  const double total = img.total();
  if (img.mode == ImageMode::counts && total < opt.min_counts) {
    throw DomainError("fit_peak: " + std::to_string(total) + " counts, need at least " +
                      std::to_string(opt.min_counts));
  }
  const auto [lo, hi] = std::minmax_element(img.values.begin(), img.values.end());
  if (*lo < 0.0) throw DomainError("fit_peak: negative pixel values");
  if (*hi - *lo <= 1e-12 * std::max(1.0, *hi)) throw DomainError("fit_peak: degenerate (flat) image");

  detail::FitProblem fp;
  fp.line = g.is_line();
  fp.scale = g.dkx();
  fp.origin_x = g.kx_min;
  fp.origin_y = g.ky_min;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      fp.u.push_back(i);
      fp.v.push_back(fp.line ? 0.0 : (g.ky(j) - g.ky_min) / fp.scale);
      fp.n.push_back(img.at(i, j));
    }
  }

  // Starting point from a box-smoothed copy.
  std::vector<double> smooth(fp.n.size(), 0.0);
  const int ry = fp.line ? 0 : 1;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      double s = 0.0;
      int c = 0;
      for (int dj = -ry; dj <= ry; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          const int ii = i + di, jj = j + dj;
          if (ii < 0 || jj < 0 || ii >= g.nx || jj >= g.ny) continue;
          s += img.at(ii, jj);
          ++c;
        }
      }
      smooth[static_cast<std::size_t>(j) * g.nx + i] = s / c;
    }
  }
  std::vector<double> sorted = smooth;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 4, sorted.end());
  const double b0 = std::max(sorted[sorted.size() / 4], 1e-3 * *hi + 1e-12);
  const auto peak_it = std::max_element(smooth.begin(), smooth.end());
  const auto peak_idx = static_cast<std::size_t>(peak_it - smooth.begin());
  const double a0 = std::max(*peak_it - b0, 1e-12);
  std::size_t above_half = 0;
  for (double s : smooth)
    if (s > b0 + a0 / 2.0) ++above_half;
  const double w0 = fp.line ? std::max(1.0, above_half / (2.0 * std::sqrt(2.0 * std::log(2.0))))
                            : std::max(1.0, std::sqrt(above_half / (2.0 * kPi * std::log(2.0))));

  const int np = fp.n_params();
  Eigen::VectorXd p(np);
  p[0] = a0;
  p[1] = fp.u[peak_idx];
  if (!fp.line) p[2] = fp.v[peak_idx];
  p[np - 2] = w0;
  p[np - 1] = b0;

  Eigen::VectorXd mu;
  Eigen::MatrixXd jac;
  detail::model_and_jacobian(fp, p, mu, jac);
  double dev = detail::deviance(fp, mu);
  double lambda = 1e-3;
  PeakFit out;
  const Eigen::Map<const Eigen::VectorXd> data(fp.n.data(), static_cast<Eigen::Index>(fp.n.size()));

  for (int it = 0; it < opt.max_iterations; ++it) {
    out.iterations = it + 1;
    const Eigen::VectorXd w = mu.cwiseInverse();
    const Eigen::MatrixXd jtw = jac.transpose() * w.asDiagonal();
    const Eigen::MatrixXd fisher = jtw * jac;
    const Eigen::VectorXd score = jtw * (data - mu);
    bool improved = false;
    for (int attempt = 0; attempt < 30 && !improved; ++attempt) {
      Eigen::MatrixXd damped = fisher;
      damped.diagonal() += lambda * fisher.diagonal();
      const Eigen::VectorXd step = damped.ldlt().solve(score);
      const Eigen::VectorXd trial = p + step;
      if (!(trial[0] >= 0.0) || !(trial[np - 2] > 0.0) || !(trial[np - 1] > 0.0)) {
        lambda *= 10.0;
        continue;
      }
      Eigen::VectorXd mu_t;
      Eigen::MatrixXd jac_t;
      detail::model_and_jacobian(fp, trial, mu_t, jac_t);
      const double dev_t = detail::deviance(fp, mu_t);
      if (std::isfinite(dev_t) && dev_t <= dev) {
        const double change = (dev - dev_t) / std::max(1.0, std::abs(dev));
        const double move = step.segment(1, fp.line ? 1 : 2).norm();
        p = trial;
        mu = mu_t;
        jac = jac_t;
        dev = dev_t;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (change < opt.tolerance && move < 1e-6) out.converged = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) {
      // No downhill step left: the current point is the optimum to machine precision.
      out.converged = true;
    }
    if (out.converged) break;
  }

  const double cu = p[1], cv = fp.line ? 0.0 : p[2];
  const bool inside = cu >= -0.5 && cu <= g.nx - 0.5 &&
                      (fp.line || (cv >= -0.5 && cv <= (g.ky_max - g.ky_min) / fp.scale + 0.5));
  if (!out.converged || !inside) {
    auto fallback = detail::centroid_fit(fp, b0);
    fallback.iterations = out.iterations;
    return fallback;
  }

  const Eigen::VectorXd w = mu.cwiseInverse();
  const Eigen::MatrixXd fisher = jac.transpose() * w.asDiagonal() * jac;
  const Eigen::MatrixXd cov = fisher.ldlt().solve(Eigen::MatrixXd::Identity(np, np));
  const double s2 = fp.scale * fp.scale;
  out.method = FitMethod::gaussian;
  out.center = {fp.origin_x + cu * fp.scale, fp.origin_y + cv * fp.scale};
  out.covariance(0, 0) = cov(1, 1) * s2;
  if (!fp.line) {
    out.covariance(0, 1) = out.covariance(1, 0) = cov(1, 2) * s2;
    out.covariance(1, 1) = cov(2, 2) * s2;
  }
  out.amplitude = p[0];
  out.width = p[np - 2] * fp.scale;
  out.background = p[np - 1];
  const double dof = std::max(1.0, static_cast<double>(fp.n.size()) - np);
  out.residual = dev / dof;
  return out;
}

}  // namespace stokes
