// SPDX-License-Identifier: Apache-2.0
//
// Test-only reference computations, kept independent of the library's
// implementation paths: long-double/compensated evaluations, quadrature,
// Monte Carlo, and a hand-rolled linear solver.

#ifndef NMOG_TESTS_ORACLES_HPP
#define NMOG_TESTS_ORACLES_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "nmog/cube.hpp"

namespace nmog::oracle {

// Normal-Gamma posterior of weighted residual observations, accumulated in
// long double from the raw (weight, first moment, second moment) triples.
struct NormalGammaRef {
  double m, beta, c, d;
};
NormalGammaRef normal_gamma_reference(const std::vector<double>& weights,
                                      const std::vector<double>& resid_mean,
                                      const std::vector<double>& resid_sq,
                                      double m0, double beta0, double c0,
                                      double scale_mean);

// Posterior moments of the same model by direct 2-D quadrature over
// (mu, log tau): E[mu], E[tau], E[ln tau], E[tau (mu - E mu)^2].
struct PosteriorMoments {
  double mean_mu;
  double mean_tau;
  double mean_log_tau;
  double mean_tau_centered_sq;
};
PosteriorMoments normal_gamma_quadrature(const std::vector<double>& weights,
                                         const std::vector<double>& resid_mean,
                                         const std::vector<double>& resid_sq,
                                         double m0, double beta0, double c0,
                                         double scale_mean);

// Two-component responsibility for a single cell, evaluated with long
// double arithmetic and compensated summation.
Eigen::Vector2d responsibility_reference(
    double y, const Eigen::Vector2d& alpha, const Eigen::Vector2d& m,
    const Eigen::Vector2d& beta, const Eigen::Vector2d& c,
    const Eigen::Vector2d& d, double recon_mean, double recon_var);

// Monte-Carlo estimate of E[ln pi_k] under Dirichlet(alpha), with standard
// errors.
struct DirichletLogMoment {
  Eigen::VectorXd mean;
  Eigen::VectorXd stderror;
};
DirichletLogMoment dirichlet_log_expect_mc(const Eigen::VectorXd& alpha,
                                           int samples, std::uint64_t seed);

// SSIM straight from the definition: full 11x11 window double loops, no
// separable filtering.
double ssim_reference(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

// Least squares min ||A x - b|| via normal equations and Gaussian
// elimination with partial pivoting.
Eigen::VectorXd least_squares_reference(const Eigen::MatrixXd& a,
                                        const Eigen::VectorXd& b);

// Gamma(shape, rate) expectations by 1-D quadrature in log space.
struct GammaQuadrature {
  double mean;
  double mean_log;
  double entropy;
};
GammaQuadrature gamma_quadrature(double shape, double rate);

// E[ln pi_k] and entropy of Dirichlet(a1, a2) (K = 2) via Beta quadrature.
struct Dirichlet2Quadrature {
  double mean_log_first;
  double mean_log_second;
  double entropy;
};
Dirichlet2Quadrature dirichlet2_quadrature(double a1, double a2);

// Rank-r cube with entries in [0,1]: uniform factors, single global scale
// so the planted rank is exact.
Cube planted_cube(int rows, int cols, int bands, int rank, std::uint64_t seed);

// Rank-r cube that is a fixed point of normalize_bands: first factor column
// spans [0,1] with interior values pulled toward the middle, remaining
// columns are small perturbations vanishing at the extremes.
Cube normalization_fixed_cube(int rows, int cols, int bands, int rank,
                              std::uint64_t seed);

} // namespace nmog::oracle

#endif
