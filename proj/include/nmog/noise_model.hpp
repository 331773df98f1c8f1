// SPDX-License-Identifier: Apache-2.0
#ifndef NMOG_NOISE_MODEL_HPP
#define NMOG_NOISE_MODEL_HPP

#include <Eigen/Dense>

#include "nmog/cube.hpp"
#include "nmog/rng.hpp"

namespace nmog {

struct FactorState;
struct FactorMoments;

// Fixed prior constants of the model plus the two structural choices
// (component count and rank bound).
struct Hyperparams {
  double m0 = 0.0;
  double beta0 = 1e-3;
  double c0 = 1e-3;
  double eta0 = 1e-3;
  double lambda0 = 1e-3;
  double xi0 = 1e-3;
  double delta0 = 1e-3;
  double alpha0 = 1e-3;
  int components = 3; // K
  int rank_bound = 20; // R, upper bound pruned during inference

  void validate() const;
};

// Per-cell component assignment probabilities <z_ijk>, stored as an
// N x (B*K) matrix so each (band, component) column is contiguous.
struct Responsibilities {
  Eigen::Index n_pixels = 0;
  Eigen::Index n_bands = 0;
  int n_components = 0;
  Eigen::MatrixXd values;

  Responsibilities() = default;
  Responsibilities(Eigen::Index n, Eigen::Index b, int k)
      : n_pixels(n), n_bands(b), n_components(k),
        values(Eigen::MatrixXd::Zero(n, b * k)) {}

  Eigen::Index flat(Eigen::Index band, int comp) const {
    return band * n_components + comp;
  }
  auto col(Eigen::Index band, int comp) { return values.col(flat(band, comp)); }
  auto col(Eigen::Index band, int comp) const {
    return values.col(flat(band, comp));
  }

  /// Symmetric Dirichlet(1) rows from per-band substreams of `rng`.
  static Responsibilities random_init(Eigen::Index n, Eigen::Index b, int k,
                                      const Rng& rng);
};

// Per-band mixture posteriors: Dirichlet concentration alpha and the
// Normal-Gamma parameters (m, beta, c, d) of each component, all B x K.
struct BandMixturePosterior {
  Eigen::MatrixXd alpha;
  Eigen::MatrixXd m;
  Eigen::MatrixXd beta;
  Eigen::MatrixXd c;
  Eigen::MatrixXd d;
  bool rate_clamped = false; // set when a d fell to the numerical floor

  BandMixturePosterior() = default;
  BandMixturePosterior(Eigen::Index bands, int k)
      : alpha(Eigen::MatrixXd::Zero(bands, k)),
        m(Eigen::MatrixXd::Zero(bands, k)),
        beta(Eigen::MatrixXd::Zero(bands, k)),
        c(Eigen::MatrixXd::Zero(bands, k)),
        d(Eigen::MatrixXd::Zero(bands, k)) {}

  Eigen::Index bands() const { return alpha.rows(); }
  int components() const { return static_cast<int>(alpha.cols()); }

  double precision_mean(Eigen::Index j, int k) const {
    return c(j, k) / d(j, k);
  }
};

// Posterior over the shared Gamma rate of all component precisions.
struct GlobalScalePosterior {
  double eta = 1e-3;
  double lambda = 1e-3;
  double mean() const { return eta / lambda; }
};

struct NoiseState {
  Responsibilities resp;
  BandMixturePosterior mix;
  GlobalScalePosterior scale;
};

// Sufficient statistics of one (band, component) cell:
//   weight   = sum_i r_ijk
//   resid    = sum_i r_ijk <Y_ij - u_i v_j^T>
//   resid_sq = sum_i r_ijk <(Y_ij - u_i v_j^T)^2>
struct CellMoments {
  double weight = 0.0;
  double resid = 0.0;
  double resid_sq = 0.0;
};

CellMoments band_component_moments(const Responsibilities& resp,
                                   const FactorMoments& moments,
                                   Eigen::Index band, int comp);

// Closed-form Normal-Gamma posterior of one cell given its moments and the
// current global-scale mean. Clamps a non-positive rate to 1e-12 and
// reports it through `clamped`.
struct NormalGammaCell {
  double m = 0.0;
  double beta = 0.0;
  double c = 0.0;
  double d = 0.0;
  bool clamped = false;
};
NormalGammaCell normal_gamma_cell(const CellMoments& mom, double scale_mean,
                                  const Hyperparams& h);

/// In-place responsibility refresh; log-sum-exp normalized per cell.
void update_responsibilities(Responsibilities& resp,
                             const BandMixturePosterior& mix,
                             const FactorMoments& moments);

/// Spec surface: computes factor moments internally.
Responsibilities update_responsibilities(const ObservationMatrix& Y,
                                         const BandMixturePosterior& mix,
                                         const FactorState& factors);

/// alpha_jk = alpha0 + sum_i r_ijk
void update_mixing(BandMixturePosterior& mix, const Responsibilities& resp,
                   const Hyperparams& h);

/// Conjugate Normal-Gamma refresh of (m, beta, c, d) for every cell.
/// With lock_means the component means stay at the prior m0 and the other
/// parameters take their coordinate optima within that restricted family;
/// the inference loop uses this during its warmup so that the early
/// shrinkage phase cannot park reconstruction offsets in the means.
void update_normal_gamma(BandMixturePosterior& mix,
                         const Responsibilities& resp,
                         const FactorMoments& moments,
                         const GlobalScalePosterior& scale,
                         const Hyperparams& h, bool lock_means = false);

/// eta = eta0 + c0*K*B, lambda = lambda0 + sum_jk <tau_jk>
GlobalScalePosterior update_global_scale(const BandMixturePosterior& mix,
                                         const Hyperparams& h);

} // namespace nmog

#endif
