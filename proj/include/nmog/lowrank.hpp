// SPDX-License-Identifier: Apache-2.0
#ifndef NMOG_LOWRANK_HPP
#define NMOG_LOWRANK_HPP

#include <Eigen/Dense>

#include "nmog/noise_model.hpp"

namespace nmog {

// Symmetric R x R matrices are kept packed (upper triangle, column-major):
// entry (l, m) with l <= m sits at m*(m+1)/2 + l.
inline Eigen::Index packed_size(Eigen::Index r) { return r * (r + 1) / 2; }
inline Eigen::Index packed_index(Eigen::Index l, Eigen::Index m) {
  return m * (m + 1) / 2 + l; // requires l <= m
}
using PackedConstRow =
    Eigen::Ref<const Eigen::RowVectorXd, 0, Eigen::InnerStride<>>;
using PackedRow = Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>>;
Eigen::MatrixXd unpack_symmetric(const PackedConstRow& packed, Eigen::Index r);
void pack_symmetric(const Eigen::MatrixXd& full, PackedRow packed);

// Variational posteriors over the factor rows: means plus one packed R x R
// covariance per row.
struct FactorState {
  Eigen::MatrixXd u_mean; // N x R
  Eigen::MatrixXd v_mean; // B x R
  Eigen::MatrixXd u_cov;  // N x packed_size(R)
  Eigen::MatrixXd v_cov;  // B x packed_size(R)
  int active_rank = 0;

  Eigen::Index pixels() const { return u_mean.rows(); }
  Eigen::Index bands() const { return v_mean.rows(); }
  int rank() const { return static_cast<int>(u_mean.cols()); }

  /// Warm start: truncated SVD of Y split evenly between the factors,
  /// covariances 1e-2 * I.
  static FactorState svd_init(const Eigen::MatrixXd& y, int rank);
};

// Gamma posteriors over the column precisions that drive rank pruning.
struct ArdPosterior {
  Eigen::VectorXd shape; // xi_l
  Eigen::VectorXd rate;  // delta_l

  Eigen::VectorXd mean() const { return shape.cwiseQuotient(rate); }

  static ArdPosterior from_prior(int rank, const Hyperparams& h) {
    ArdPosterior ard;
    ard.shape = Eigen::VectorXd::Constant(rank, h.xi0);
    ard.rate = Eigen::VectorXd::Constant(rank, h.delta0);
    return ard;
  }
};

// Quantities derived from a FactorState that the updates consume:
// second-moment packs of both sides and the residual field against Y.
struct FactorMoments {
  Eigen::MatrixXd u_second;  // N x packed; <u_i^T u_i> packed per row
  Eigen::MatrixXd v_second;  // B x packed
  Eigen::VectorXd pack_mult; // 1 for diagonal entries, 2 off-diagonal
  Eigen::MatrixXd recon;      // N x B, <U><V>^T
  Eigen::MatrixXd resid_mean; // Y - recon
  Eigen::MatrixXd resid_var;  // Var(u_i v_j^T), clamped at 0
  Eigen::MatrixXd resid_sq;   // resid_mean^2 + resid_var

  static FactorMoments compute(const Eigen::MatrixXd& y,
                               const FactorState& factors);

  void refresh_second(const FactorState& factors);
  void refresh_u_second(const FactorState& factors);
  void refresh_v_second(const FactorState& factors);
  /// Needs fresh second-moment packs.
  void refresh_residuals(const Eigen::MatrixXd& y, const FactorState& factors);
};

enum class FactorSide { pixels, bands };

/// One coordinate update of all rows on one side. The bands side consumes
/// whatever u_second currently holds, so refresh after updating pixels.
/// Moments' second-moment pack for the updated side is refreshed on exit;
/// residual fields are left stale for the caller.
void update_factor_rows(FactorState& factors, FactorMoments& moments,
                        const Eigen::MatrixXd& y, const Responsibilities& resp,
                        const BandMixturePosterior& mix,
                        const ArdPosterior& ard, FactorSide side);

/// xi_l = xi0 + (N+B)/2, delta_l = delta0 + (sum_i<u_il^2> + sum_j<v_jl^2>)/2
ArdPosterior update_ard(const FactorState& factors, const Hyperparams& h);

/// Drops columns with <gamma_l> above threshold_ratio times the smallest;
/// always keeps at least the smallest-precision column. Returns the number
/// of dropped columns.
int prune_rank(FactorState& factors, ArdPosterior& ard, double threshold_ratio);

} // namespace nmog

#endif
