// SPDX-License-Identifier: Apache-2.0
#ifndef NMOG_METRICS_HPP
#define NMOG_METRICS_HPP

#include <Eigen/Dense>
#include <string>

#include "nmog/cube.hpp"

#include <json.hpp>

namespace nmog {

struct QualityReport {
  Eigen::VectorXd psnr_per_band; // dB
  Eigen::VectorXd ssim_per_band;
  double mpsnr = 0.0;
  double mssim = 0.0;
  double elapsed_seconds = 0.0;
};

/// Band b of a cube as a rows x cols double image.
Eigen::MatrixXd band_image(const Cube& cube, std::uint32_t band);

/// 10*log10(peak^2 / MSE), capped at 300 dB (zero MSE included).
double psnr(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& test,
            double peak = 1.0);

/// Mean local SSIM, 11x11 Gaussian window (sigma 1.5), C1=(0.01)^2,
/// C2=(0.03)^2 on a unit dynamic range. Images smaller than the window fall
/// back to global statistics (with a stderr note).
double ssim(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& test);

/// Per-band PSNR/SSIM plus their means.
QualityReport evaluate(const Cube& reference, const Cube& test);

/// Best rank-r approximation by truncated SVD.
ObservationMatrix svd_baseline(const ObservationMatrix& y, int rank);

nlohmann::json quality_summary_json(const QualityReport& report);
void write_quality_csv(const QualityReport& report, const std::string& path);

} // namespace nmog

#endif
