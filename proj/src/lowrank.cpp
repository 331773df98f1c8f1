// SPDX-License-Identifier: Apache-2.0
#include "nmog/lowrank.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <cmath>
#include <vector>

#include "nmog/errors.hpp"
#include "nmog/kernels.hpp"
#include "nmog/parallel.hpp"

namespace nmog {

Eigen::MatrixXd unpack_symmetric(const PackedConstRow& packed,
                                 Eigen::Index r) {
  Eigen::MatrixXd full(r, r);
  for (Eigen::Index m = 0; m < r; ++m) {
    for (Eigen::Index l = 0; l <= m; ++l) {
      const double v = packed(packed_index(l, m));
      full(l, m) = v;
      full(m, l) = v;
    }
  }
  return full;
}

void pack_symmetric(const Eigen::MatrixXd& full, PackedRow packed) {
  const Eigen::Index r = full.rows();
  for (Eigen::Index m = 0; m < r; ++m) {
    for (Eigen::Index l = 0; l <= m; ++l) {
      packed(packed_index(l, m)) = full(l, m);
    }
  }
}

FactorState FactorState::svd_init(const Eigen::MatrixXd& y, int rank) {
  const Eigen::Index n = y.rows();
  const Eigen::Index b = y.cols();
  if (rank < 1 || rank > std::min(n, b)) {
    throw DimensionError("rank bound outside [1, min(N,B)]");
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(y,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd scale =
      svd.singularValues().head(rank).cwiseSqrt();

  FactorState f;
  f.u_mean = svd.matrixU().leftCols(rank) * scale.asDiagonal();
  f.v_mean = svd.matrixV().leftCols(rank) * scale.asDiagonal();
  const Eigen::Index packed = packed_size(rank);
  f.u_cov = Eigen::MatrixXd::Zero(n, packed);
  f.v_cov = Eigen::MatrixXd::Zero(b, packed);
  for (int l = 0; l < rank; ++l) {
    f.u_cov.col(packed_index(l, l)).setConstant(1e-2);
    f.v_cov.col(packed_index(l, l)).setConstant(1e-2);
  }
  f.active_rank = rank;
  return f;
}

FactorMoments FactorMoments::compute(const Eigen::MatrixXd& y,
                                     const FactorState& factors) {
  FactorMoments m;
  m.refresh_second(factors);
  m.refresh_residuals(y, factors);
  return m;
}

namespace {

void second_moment_pack(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& cov,
                        Eigen::MatrixXd& out) {
  const Eigen::Index r = mean.cols();
  out.resize(mean.rows(), packed_size(r));
  for (Eigen::Index mcol = 0; mcol < r; ++mcol) {
    for (Eigen::Index l = 0; l <= mcol; ++l) {
      const Eigen::Index e = packed_index(l, mcol);
      out.col(e) = mean.col(l).cwiseProduct(mean.col(mcol)) + cov.col(e);
    }
  }
}

} // namespace

void FactorMoments::refresh_u_second(const FactorState& factors) {
  second_moment_pack(factors.u_mean, factors.u_cov, u_second);
}

void FactorMoments::refresh_v_second(const FactorState& factors) {
  second_moment_pack(factors.v_mean, factors.v_cov, v_second);
}

void FactorMoments::refresh_second(const FactorState& factors) {
  refresh_u_second(factors);
  refresh_v_second(factors);
  const Eigen::Index r = factors.rank();
  pack_mult.resize(packed_size(r));
  for (Eigen::Index m = 0; m < r; ++m) {
    for (Eigen::Index l = 0; l <= m; ++l) {
      pack_mult(packed_index(l, m)) = (l == m) ? 1.0 : 2.0;
    }
  }
}

void FactorMoments::refresh_residuals(const Eigen::MatrixXd& y,
                                      const FactorState& factors) {
  const Eigen::Index n = y.rows();
  const Eigen::Index b = y.cols();
  const Eigen::Index packed = u_second.cols();

  recon.noalias() = factors.u_mean * factors.v_mean.transpose();
  resid_mean = y - recon;
  resid_var.resize(n, b);
  resid_sq.resize(n, b);

  parallel_for_each(static_cast<std::size_t>(b), [&](std::size_t jz) {
    const Eigen::Index j = static_cast<Eigen::Index>(jz);
    double* var = resid_var.col(j).data();
    std::fill(var, var + n, 0.0);
    for (Eigen::Index e = 0; e < packed; ++e) {
      const double w = pack_mult(e) * v_second(j, e);
      kernels::axpy(w, u_second.col(e).data(), var, n);
    }
    // <l^2> - <l>^2, floored at zero against cancellation
    resid_var.col(j) =
        (resid_var.col(j) - recon.col(j).cwiseAbs2()).cwiseMax(0.0);
    resid_sq.col(j) = resid_mean.col(j).cwiseAbs2() + resid_var.col(j);
  });
}

void update_factor_rows(FactorState& factors, FactorMoments& moments,
                        const Eigen::MatrixXd& y, const Responsibilities& resp,
                        const BandMixturePosterior& mix,
                        const ArdPosterior& ard, FactorSide side) {
  const Eigen::Index n = y.rows();
  const Eigen::Index b = y.cols();
  const int k = mix.components();
  const Eigen::Index r = factors.rank();
  const Eigen::Index packed = packed_size(r);
  const Eigen::VectorXd gamma_mean = ard.mean();

  // Per-cell responsibility-weighted precision and precision-weighted
  // centred data:
  //   w_ij = sum_k r_ijk <tau_jk>
  //   t_ij = sum_k r_ijk <tau_jk> (Y_ij - m_jk)
  Eigen::MatrixXd w(n, b);
  Eigen::MatrixXd t(n, b);
  parallel_for_each(static_cast<std::size_t>(b), [&](std::size_t jz) {
    const Eigen::Index j = static_cast<Eigen::Index>(jz);
    double* wcol = w.col(j).data();
    double* tcol = t.col(j).data();
    std::fill(wcol, wcol + n, 0.0);
    std::fill(tcol, tcol + n, 0.0);
    for (int c = 0; c < k; ++c) {
      const double tau = mix.precision_mean(j, c);
      const double* rcol = resp.col(j, c).data();
      kernels::axpy(tau, rcol, wcol, n);
      kernels::fma_mul(tau, rcol, y.col(j).data(), tcol, n);
      kernels::axpy(-tau * mix.m(j, c), rcol, tcol, n);
    }
  });

  const auto solve_rows = [&](const Eigen::MatrixXd& weights,
                              const Eigen::MatrixXd& loads,
                              const Eigen::MatrixXd& opp_second,
                              const Eigen::MatrixXd& opp_mean,
                              Eigen::MatrixXd& out_mean,
                              Eigen::MatrixXd& out_cov) {
    const Eigen::Index rows = out_mean.rows();
    const Eigen::Index depth = opp_mean.rows();
    parallel_for(static_cast<std::size_t>(rows), [&](std::size_t begin,
                                                     std::size_t end) {
      Eigen::RowVectorXd mpack(packed);
      Eigen::MatrixXd system(r, r);
      Eigen::MatrixXd cov(r, r);
      Eigen::VectorXd rhs(r);
      Eigen::LLT<Eigen::MatrixXd> llt;
      for (std::size_t iz = begin; iz < end; ++iz) {
        const Eigen::Index i = static_cast<Eigen::Index>(iz);
        const double* wv = weights.col(i).data();
        for (Eigen::Index e = 0; e < packed; ++e) {
          mpack(e) = kernels::dot(wv, opp_second.col(e).data(), depth);
        }
        system = unpack_symmetric(mpack, r);
        system.diagonal() += gamma_mean;
        const double* tv = loads.col(i).data();
        for (Eigen::Index l = 0; l < r; ++l) {
          rhs(l) = kernels::dot(tv, opp_mean.col(l).data(), depth);
        }
        llt.compute(system);
        if (llt.info() != Eigen::Success) {
          system.diagonal().array() += 1e-10 * system.trace() / r;
          llt.compute(system);
          if (llt.info() != Eigen::Success) {
            throw DivergenceError(
                "factor row system not positive definite after jitter", -1);
          }
        }
        cov = llt.solve(Eigen::MatrixXd::Identity(r, r));
        out_mean.row(i) = llt.solve(rhs).transpose();
        pack_symmetric(cov, out_cov.row(i));
      }
    });
  };

  if (side == FactorSide::pixels) {
    // row i of U gathers over bands: transpose copies make columns of the
    // gather contiguous
    const Eigen::MatrixXd wt = w.transpose();
    const Eigen::MatrixXd tt = t.transpose();
    solve_rows(wt, tt, moments.v_second, factors.v_mean, factors.u_mean,
               factors.u_cov);
    moments.refresh_u_second(factors);
  } else {
    solve_rows(w, t, moments.u_second, factors.u_mean, factors.v_mean,
               factors.v_cov);
    moments.refresh_v_second(factors);
  }
}

ArdPosterior update_ard(const FactorState& factors, const Hyperparams& h) {
  const Eigen::Index n = factors.pixels();
  const Eigen::Index b = factors.bands();
  const int r = factors.rank();
  ArdPosterior ard;
  ard.shape = Eigen::VectorXd::Constant(
      r, h.xi0 + 0.5 * static_cast<double>(n + b));
  ard.rate.resize(r);
  for (int l = 0; l < r; ++l) {
    const Eigen::Index diag = packed_index(l, l);
    const double u_power =
        factors.u_mean.col(l).squaredNorm() + factors.u_cov.col(diag).sum();
    const double v_power =
        factors.v_mean.col(l).squaredNorm() + factors.v_cov.col(diag).sum();
    ard.rate(l) = h.delta0 + 0.5 * (u_power + v_power);
  }
  return ard;
}

int prune_rank(FactorState& factors, ArdPosterior& ard,
               double threshold_ratio) {
  const int r = factors.rank();
  if (r <= 1) return 0;
  const Eigen::VectorXd gm = ard.mean();
  Eigen::Index argmin = 0;
  const double cutoff = threshold_ratio * gm.minCoeff(&argmin);
  std::vector<int> keep;
  keep.reserve(r);
  for (int l = 0; l < r; ++l) {
    if (gm(l) <= cutoff) keep.push_back(l);
  }
  if (keep.empty()) keep.push_back(static_cast<int>(argmin));
  if (static_cast<int>(keep.size()) == r) return 0;

  const int kept = static_cast<int>(keep.size());
  Eigen::MatrixXd u_mean(factors.pixels(), kept);
  Eigen::MatrixXd v_mean(factors.bands(), kept);
  Eigen::MatrixXd u_cov(factors.pixels(), packed_size(kept));
  Eigen::MatrixXd v_cov(factors.bands(), packed_size(kept));
  Eigen::VectorXd shape(kept), rate(kept);
  for (int m = 0; m < kept; ++m) {
    u_mean.col(m) = factors.u_mean.col(keep[m]);
    v_mean.col(m) = factors.v_mean.col(keep[m]);
    shape(m) = ard.shape(keep[m]);
    rate(m) = ard.rate(keep[m]);
    for (int l = 0; l <= m; ++l) {
      // keep[] is ascending, so packed indices stay ordered
      const Eigen::Index src = packed_index(keep[l], keep[m]);
      const Eigen::Index dst = packed_index(l, m);
      u_cov.col(dst) = factors.u_cov.col(src);
      v_cov.col(dst) = factors.v_cov.col(src);
    }
  }
  factors.u_mean = std::move(u_mean);
  factors.v_mean = std::move(v_mean);
  factors.u_cov = std::move(u_cov);
  factors.v_cov = std::move(v_cov);
  factors.active_rank = kept;
  ard.shape = std::move(shape);
  ard.rate = std::move(rate);
  return r - kept;
}

} // namespace nmog
