// SPDX-License-Identifier: Apache-2.0
#include "nmog/inference.hpp"

#include <Eigen/Cholesky>
#include <chrono>
#include <cmath>
#include <limits>

#include "nmog/errors.hpp"
#include "nmog/kernels.hpp"
#include "nmog/parallel.hpp"
#include "nmog/special.hpp"

namespace nmog {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double packed_log_det(const PackedConstRow& packed, Eigen::Index r) {
  Eigen::MatrixXd full = unpack_symmetric(packed, r);
  Eigen::LLT<Eigen::MatrixXd> llt(full);
  if (llt.info() != Eigen::Success) {
    full.diagonal().array() += 1e-12 * (full.trace() / r + 1.0);
    llt.compute(full);
    if (llt.info() != Eigen::Success) {
      throw DivergenceError("posterior covariance not positive definite", -1);
    }
  }
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

double elbo_from_moments(const Eigen::MatrixXd& y, const FactorState& factors,
                         const ArdPosterior& ard, const NoiseState& noise,
                         const Hyperparams& h, const FactorMoments& moments) {
  const Eigen::Index n = y.rows();
  const Eigen::Index b = y.cols();
  const int k = noise.mix.components();
  const int r = factors.rank();

  const double mean_d = noise.scale.mean();
  const double mean_log_d =
      digamma(noise.scale.eta) - std::log(noise.scale.lambda);

  double bound = 0.0;

  // noise side: likelihood, assignments, mixture priors and entropies
  std::vector<double> band_part(static_cast<std::size_t>(b), 0.0);
  parallel_for_each(static_cast<std::size_t>(b), [&](std::size_t jz) {
    const Eigen::Index j = static_cast<Eigen::Index>(jz);
    const double alpha_total = noise.mix.alpha.row(j).sum();
    const double psi_total = digamma(alpha_total);
    double acc = 0.0;
    for (int c = 0; c < k; ++c) {
      const CellMoments mom =
          band_component_moments(noise.resp, moments, j, c);
      const double alpha = noise.mix.alpha(j, c);
      const double m = noise.mix.m(j, c);
      const double beta = noise.mix.beta(j, c);
      const double shape = noise.mix.c(j, c);
      const double rate = noise.mix.d(j, c);
      const double tau = shape / rate;
      const double log_tau = digamma(shape) - std::log(rate);
      const double log_pi = digamma(alpha) - psi_total;

      // <ln p(Y | Z, mu, tau, U, V)>
      acc += mom.weight * 0.5 * (log_tau - kLog2Pi) -
             0.5 * (tau * (mom.resid_sq - 2.0 * m * mom.resid +
                           mom.weight * m * m) +
                    mom.weight / beta);
      // <ln p(Z | pi)> and the concentration part of <ln p(pi)>
      acc += (mom.weight + h.alpha0 - 1.0) * log_pi;
      // <ln p(mu, tau | d)>
      acc += 0.5 * std::log(h.beta0) - 0.5 * kLog2Pi + 0.5 * log_tau -
             0.5 * h.beta0 * (tau * (m - h.m0) * (m - h.m0) + 1.0 / beta) +
             h.c0 * mean_log_d - std::lgamma(h.c0) + (h.c0 - 1.0) * log_tau -
             mean_d * tau;
      // entropy of q(mu, tau)
      acc += gamma_entropy(shape, rate) + 0.5 * (1.0 + kLog2Pi) -
             0.5 * std::log(beta) - 0.5 * log_tau;
      // entropy of q(Z)
      acc -= kernels::xlogx_sum(noise.resp.col(j, c).data(), n);
      // entropy of q(pi), per-component part
      acc += std::lgamma(alpha) - (alpha - 1.0) * digamma(alpha);
    }
    // Dirichlet prior normalizer and remaining entropy terms
    acc += std::lgamma(k * h.alpha0) - k * std::lgamma(h.alpha0);
    acc += -std::lgamma(alpha_total) + (alpha_total - k) * psi_total;
    band_part[jz] = acc;
  });
  for (const double part : band_part) bound += part;

  // global scale d
  bound += h.eta0 * std::log(h.lambda0) - std::lgamma(h.eta0) +
           (h.eta0 - 1.0) * mean_log_d - h.lambda0 * mean_d;
  bound += gamma_entropy(noise.scale.eta, noise.scale.lambda);

  // factor priors p(U|gamma), p(V|gamma) and p(gamma), plus q(gamma) entropy
  for (int l = 0; l < r; ++l) {
    const double gm = ard.shape(l) / ard.rate(l);
    const double log_gm = digamma(ard.shape(l)) - std::log(ard.rate(l));
    const Eigen::Index diag = packed_index(l, l);
    const double u_power =
        factors.u_mean.col(l).squaredNorm() + factors.u_cov.col(diag).sum();
    const double v_power =
        factors.v_mean.col(l).squaredNorm() + factors.v_cov.col(diag).sum();
    bound += 0.5 * static_cast<double>(n + b) * log_gm -
             0.5 * gm * (u_power + v_power);
    bound += h.xi0 * std::log(h.delta0) - std::lgamma(h.xi0) +
             (h.xi0 - 1.0) * log_gm - h.delta0 * gm;
    bound += gamma_entropy(ard.shape(l), ard.rate(l));
  }
  bound -= 0.5 * static_cast<double>((n + b) * r) * kLog2Pi;

  // q(U), q(V) entropies
  std::vector<double> row_part(static_cast<std::size_t>(n), 0.0);
  parallel_for_each(static_cast<std::size_t>(n), [&](std::size_t iz) {
    row_part[iz] = packed_log_det(
        factors.u_cov.row(static_cast<Eigen::Index>(iz)), r);
  });
  double logdet_sum = 0.0;
  for (const double part : row_part) logdet_sum += part;
  for (Eigen::Index j = 0; j < b; ++j) {
    logdet_sum += packed_log_det(factors.v_cov.row(j), r);
  }
  bound += 0.5 * static_cast<double>((n + b) * r) * (1.0 + kLog2Pi) +
           0.5 * logdet_sum;

  if (!std::isfinite(bound)) {
    throw DivergenceError("non-finite evidence bound", -1);
  }
  return bound;
}

void check_state_finite(const FactorState& factors, const ArdPosterior& ard) {
  if (!factors.u_mean.allFinite() || !factors.v_mean.allFinite() ||
      !factors.u_cov.allFinite() || !factors.v_cov.allFinite()) {
    throw DivergenceError("non-finite factor posterior", -1);
  }
  if (!ard.shape.allFinite() || !ard.rate.allFinite() ||
      (ard.rate.array() <= 0.0).any()) {
    throw DivergenceError("invalid column-precision posterior", -1);
  }
}

} // namespace

void InferenceConfig::validate() const {
  hyper.validate();
  if (max_iters < 1) throw Error("max_iters must be >= 1");
  if (!(tol > 0.0)) throw Error("tol must be positive");
  if (!(prune_ratio > 0.0)) throw Error("prune_ratio must be positive");
}

double compute_elbo(const ObservationMatrix& y, const FactorState& factors,
                    const NoiseState& noise, const Hyperparams& hyper) {
  const FactorMoments moments = FactorMoments::compute(y.values, factors);
  const ArdPosterior ard = update_ard(factors, hyper);
  return elbo_from_moments(y.values, factors, ard, noise, hyper, moments);
}

InferenceResult run(const ObservationMatrix& y, const InferenceConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = y.n_pixels;
  const Eigen::Index b = y.n_bands;
  if (n < 2 || b < 2) throw DimensionError("need at least 2 pixels and 2 bands");
  if (!y.values.allFinite()) throw Error("observation matrix has non-finite values");
  const int k = cfg.hyper.components;
  const int r = cfg.hyper.rank_bound;
  if (r > std::min(n, b)) {
    throw DimensionError("rank bound exceeds min(pixels, bands)");
  }

  const auto t_start = std::chrono::steady_clock::now();
  const Rng rng(cfg.seed);
  const Hyperparams& h = cfg.hyper;

  InferenceResult state;
  state.factors = FactorState::svd_init(y.values, r);
  state.ard = update_ard(state.factors, h);
  state.noise.resp = Responsibilities::random_init(n, b, k, rng);
  FactorMoments moments = FactorMoments::compute(y.values, state.factors);
  state.noise.mix = BandMixturePosterior(b, k);
  update_mixing(state.noise.mix, state.noise.resp, h);
  // the shared rate starts at the small constant the precisions' prior is
  // built around; its posterior takes over after the first sweep
  state.noise.scale = GlobalScalePosterior{h.eta0, h.eta0 * 1e3};
  update_normal_gamma(state.noise.mix, state.noise.resp, moments,
                      state.noise.scale, h, /*lock_means=*/true);
  state.noise.scale = update_global_scale(state.noise.mix, h);
  check_state_finite(state.factors, state.ard);

  InferenceResult snapshot = state; // last finite state
  Eigen::MatrixXd recon_prev = moments.recon;
  InferenceReport& report = state.report;

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    try {
      update_responsibilities(state.noise.resp, state.noise.mix, moments);
      update_mixing(state.noise.mix, state.noise.resp, h);
      update_normal_gamma(state.noise.mix, state.noise.resp, moments,
                          state.noise.scale, h,
                          iter <= cfg.mean_warmup_iters);
      state.noise.scale = update_global_scale(state.noise.mix, h);
      update_factor_rows(state.factors, moments, y.values, state.noise.resp,
                         state.noise.mix, state.ard, FactorSide::pixels);
      update_factor_rows(state.factors, moments, y.values, state.noise.resp,
                         state.noise.mix, state.ard, FactorSide::bands);
      state.ard = update_ard(state.factors, h);
      if (iter >= cfg.prune_start_iter &&
          prune_rank(state.factors, state.ard, cfg.prune_ratio) > 0) {
        moments = FactorMoments::compute(y.values, state.factors);
      } else {
        moments.refresh_residuals(y.values, state.factors);
      }
      check_state_finite(state.factors, state.ard);

      const double denom = std::max(recon_prev.norm(), 1e-300);
      const double rel_change = (moments.recon - recon_prev).norm() / denom;
      recon_prev = moments.recon;

      double elbo = std::numeric_limits<double>::quiet_NaN();
      if (cfg.elbo_check) {
        elbo = elbo_from_moments(y.values, state.factors, state.ard,
                                 state.noise, h, moments);
        report.elbo_trace.push_back(elbo);
      }
      report.iterations_run = iter;

      if (cfg.observer) {
        cfg.observer(IterationView{iter, state.factors, state.ard, state.noise,
                                   elbo, rel_change});
      }
      if (rel_change < cfg.tol) {
        report.converged = true;
        break;
      }
      snapshot.factors = state.factors;
      snapshot.ard = state.ard;
      snapshot.noise = state.noise;
    } catch (const DivergenceError& err) {
      state.factors = snapshot.factors;
      state.ard = snapshot.ard;
      state.noise = snapshot.noise;
      report.diverged = true;
      report.diagnostic = std::string(err.what()) + " at iteration " +
                          std::to_string(iter);
      break;
    }
  }

  report.final_rank = state.factors.active_rank;
  report.bands.resize(static_cast<std::size_t>(b));
  for (Eigen::Index j = 0; j < b; ++j) {
    BandNoiseSummary& summary = report.bands[static_cast<std::size_t>(j)];
    const double alpha_total = state.noise.mix.alpha.row(j).sum();
    summary.mixing.resize(k);
    summary.mean.resize(k);
    summary.precision.resize(k);
    for (int c = 0; c < k; ++c) {
      summary.mixing[c] = state.noise.mix.alpha(j, c) / alpha_total;
      summary.mean[c] = state.noise.mix.m(j, c);
      summary.precision[c] = state.noise.mix.precision_mean(j, c);
    }
  }
  report.seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t_start)
                       .count();
  return state;
}

std::pair<Cube, InferenceReport> denoise(const Cube& cube,
                                         const InferenceConfig& cfg) {
  cube.validate();
  const std::size_t pixels = cube.pixels();

  // band affine ranges of the input, needed to map the result back
  Eigen::VectorXd lo(cube.bands), hi(cube.bands);
  for (std::uint32_t band = 0; band < cube.bands; ++band) {
    const float* src = cube.band(band);
    float mn = src[0], mx = src[0];
    for (std::size_t i = 1; i < pixels; ++i) {
      mn = std::min(mn, src[i]);
      mx = std::max(mx, src[i]);
    }
    lo(band) = mn;
    hi(band) = mx;
  }

  const Cube normalized = normalize_bands(cube);
  const ObservationMatrix y = cube_to_matrix(normalized);
  InferenceResult result = run(y, cfg);

  ObservationMatrix restored(y.n_pixels, y.n_bands);
  restored.values.noalias() =
      result.factors.u_mean * result.factors.v_mean.transpose();
  for (Eigen::Index j = 0; j < y.n_bands; ++j) {
    const double span = hi(j) - lo(j);
    restored.values.col(j) = (restored.values.col(j) * span).array() + lo(j);
  }
  restored.values = restored.values.cwiseMax(0.0).cwiseMin(1.0);

  Cube out = matrix_to_cube(restored, cube.rows, cube.cols);
  return {std::move(out), std::move(result.report)};
}

nlohmann::json report_to_json(const InferenceReport& report) {
  nlohmann::json bands = nlohmann::json::array();
  for (const BandNoiseSummary& summary : report.bands) {
    bands.push_back({{"pi", summary.mixing},
                     {"m", summary.mean},
                     {"tau", summary.precision}});
  }
  nlohmann::json out{{"iterations", report.iterations_run},
                     {"final_rank", report.final_rank},
                     {"elbo", report.elbo_trace},
                     {"converged", report.converged},
                     {"seconds", report.seconds},
                     {"bands", std::move(bands)}};
  if (report.diverged) {
    out["diverged"] = true;
    out["diagnostic"] = report.diagnostic;
  }
  return out;
}

} // namespace nmog
