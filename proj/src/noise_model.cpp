// SPDX-License-Identifier: Apache-2.0
#include "nmog/noise_model.hpp"

#include <cmath>
#include <vector>

#include "nmog/errors.hpp"
#include "nmog/kernels.hpp"
#include "nmog/lowrank.hpp"
#include "nmog/parallel.hpp"
#include "nmog/special.hpp"

namespace nmog {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

void Hyperparams::validate() const {
  if (!std::isfinite(m0)) throw Error("m0 must be finite");
  for (const double v : {beta0, c0, eta0, lambda0, xi0, delta0, alpha0}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error("scale hyperparameters must be strictly positive");
    }
  }
  if (components < 1) throw Error("component count must be >= 1");
  if (rank_bound < 1) throw Error("rank bound must be >= 1");
}

Responsibilities Responsibilities::random_init(Eigen::Index n, Eigen::Index b,
                                               int k, const Rng& rng) {
  Responsibilities resp(n, b, k);
  parallel_for_each(static_cast<std::size_t>(b), [&](std::size_t jz) {
    const Eigen::Index j = static_cast<Eigen::Index>(jz);
    Rng stream = rng.substream(0x7265u + static_cast<std::uint64_t>(j));
    std::vector<double> draw(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      double total = 0.0;
      for (int c = 0; c < k; ++c) {
        draw[c] = stream.exponential();
        total += draw[c];
      }
      for (int c = 0; c < k; ++c) {
        resp.values(i, resp.flat(j, c)) = draw[c] / total;
      }
    }
  });
  return resp;
}

CellMoments band_component_moments(const Responsibilities& resp,
                                   const FactorMoments& moments,
                                   Eigen::Index band, int comp) {
  const Eigen::Index n = resp.n_pixels;
  const double* rcol = resp.col(band, comp).data();
  CellMoments out;
  out.weight = kernels::sum(rcol, n);
  out.resid = kernels::dot(rcol, moments.resid_mean.col(band).data(), n);
  out.resid_sq = kernels::dot(rcol, moments.resid_sq.col(band).data(), n);
  return out;
}

NormalGammaCell normal_gamma_cell(const CellMoments& mom, double scale_mean,
                                  const Hyperparams& h) {
  NormalGammaCell cell;
  cell.beta = h.beta0 + mom.weight;
  cell.c = h.c0 + 0.5 * mom.weight;
  cell.m = (h.beta0 * h.m0 + mom.resid) / cell.beta;
  cell.d = scale_mean +
           0.5 * (mom.resid_sq + h.beta0 * h.m0 * h.m0 -
                  cell.beta * cell.m * cell.m);
  if (!(cell.d > 0.0)) {
    cell.d = 1e-12;
    cell.clamped = true;
  }
  return cell;
}

namespace {

void check_mixture_finite(const BandMixturePosterior& mix) {
  if (!mix.alpha.allFinite() || !mix.m.allFinite() || !mix.beta.allFinite() ||
      !mix.c.allFinite() || !mix.d.allFinite()) {
    throw DivergenceError("non-finite mixture posterior", -1);
  }
  if ((mix.alpha.array() <= 0.0).any() || (mix.beta.array() <= 0.0).any() ||
      (mix.c.array() <= 0.0).any() || (mix.d.array() <= 0.0).any()) {
    throw DivergenceError("non-positive mixture posterior parameter", -1);
  }
}

} // namespace

void update_responsibilities(Responsibilities& resp,
                             const BandMixturePosterior& mix,
                             const FactorMoments& moments) {
  check_mixture_finite(mix);
  const Eigen::Index n = resp.n_pixels;
  const Eigen::Index b = resp.n_bands;
  const int k = resp.n_components;

  parallel_for(static_cast<std::size_t>(b), [&](std::size_t begin,
                                                std::size_t end) {
    Eigen::MatrixXd logits(n, k);
    std::vector<const double*> in_ptr(k);
    std::vector<double*> out_ptr(k);
    for (std::size_t jz = begin; jz < end; ++jz) {
      const Eigen::Index j = static_cast<Eigen::Index>(jz);
      const double psi_total = digamma(mix.alpha.row(j).sum());
      const double* e1 = moments.resid_mean.col(j).data();
      const double* e2 = moments.resid_sq.col(j).data();
      for (int c = 0; c < k; ++c) {
        const double tau = mix.precision_mean(j, c);
        const double log_tau = digamma(mix.c(j, c)) - std::log(mix.d(j, c));
        const double log_pi = digamma(mix.alpha(j, c)) - psi_total;
        const double mean = mix.m(j, c);
        // log rho = <ln pi> + <ln tau>/2 - ln(2pi)/2
        //           - (tau*(e2 - 2 m e1 + m^2) + 1/beta)/2
        const double base = log_pi + 0.5 * log_tau - 0.5 * kLog2Pi -
                            0.5 * tau * mean * mean -
                            0.5 / mix.beta(j, c);
        kernels::affine2(base, tau * mean, e1, -0.5 * tau, e2,
                         logits.col(c).data(), n);
        in_ptr[c] = logits.col(c).data();
        out_ptr[c] = resp.col(j, c).data();
      }
      kernels::softmax_columns(in_ptr.data(), out_ptr.data(), k, n);
    }
  });

  if (!resp.values.allFinite()) {
    throw DivergenceError("non-finite responsibilities", -1);
  }
}

Responsibilities update_responsibilities(const ObservationMatrix& y,
                                         const BandMixturePosterior& mix,
                                         const FactorState& factors) {
  const FactorMoments moments = FactorMoments::compute(y.values, factors);
  Responsibilities resp(y.n_pixels, y.n_bands, mix.components());
  update_responsibilities(resp, mix, moments);
  return resp;
}

void update_mixing(BandMixturePosterior& mix, const Responsibilities& resp,
                   const Hyperparams& h) {
  const Eigen::Index b = resp.n_bands;
  const int k = resp.n_components;
  parallel_for_each(static_cast<std::size_t>(b), [&](std::size_t jz) {
    const Eigen::Index j = static_cast<Eigen::Index>(jz);
    for (int c = 0; c < k; ++c) {
      mix.alpha(j, c) =
          h.alpha0 + kernels::sum(resp.col(j, c).data(), resp.n_pixels);
    }
  });
}

void update_normal_gamma(BandMixturePosterior& mix,
                         const Responsibilities& resp,
                         const FactorMoments& moments,
                         const GlobalScalePosterior& scale,
                         const Hyperparams& h, bool lock_means) {
  const Eigen::Index b = resp.n_bands;
  const int k = resp.n_components;
  const double scale_mean = scale.mean();
  std::vector<char> clamped(static_cast<std::size_t>(b), 0);
  parallel_for_each(static_cast<std::size_t>(b), [&](std::size_t jz) {
    const Eigen::Index j = static_cast<Eigen::Index>(jz);
    for (int c = 0; c < k; ++c) {
      const CellMoments mom = band_component_moments(resp, moments, j, c);
      NormalGammaCell cell;
      if (lock_means) {
        // coordinate optimum with the mean pinned at the prior location
        cell.m = h.m0;
        cell.beta = h.beta0 + mom.weight;
        cell.c = h.c0 + 0.5 * mom.weight;
        cell.d = scale_mean +
                 0.5 * (mom.resid_sq - 2.0 * h.m0 * mom.resid +
                        mom.weight * h.m0 * h.m0);
        if (!(cell.d > 0.0)) {
          cell.d = 1e-12;
          cell.clamped = true;
        }
      } else {
        cell = normal_gamma_cell(mom, scale_mean, h);
      }
      mix.m(j, c) = cell.m;
      mix.beta(j, c) = cell.beta;
      mix.c(j, c) = cell.c;
      mix.d(j, c) = cell.d;
      if (cell.clamped) clamped[jz] = 1;
    }
  });
  for (const char flag : clamped) {
    if (flag) {
      mix.rate_clamped = true;
      break;
    }
  }
}

GlobalScalePosterior update_global_scale(const BandMixturePosterior& mix,
                                         const Hyperparams& h) {
  GlobalScalePosterior scale;
  scale.eta = h.eta0 + h.c0 * static_cast<double>(mix.components()) *
                           static_cast<double>(mix.bands());
  scale.lambda = h.lambda0 + (mix.c.array() / mix.d.array()).sum();
  return scale;
}

} // namespace nmog
