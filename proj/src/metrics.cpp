// SPDX-License-Identifier: Apache-2.0
#include "nmog/metrics.hpp"

#include <Eigen/SVD>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "nmog/errors.hpp"
#include "nmog/kernels.hpp"
#include "nmog/parallel.hpp"

namespace nmog {

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01; // (0.01 * L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

Eigen::VectorXd ssim_window() {
  Eigen::VectorXd w(kWindow);
  const int half = kWindow / 2;
  for (int i = 0; i < kWindow; ++i) {
    const double u = i - half;
    w(i) = std::exp(-u * u / (2.0 * kWindowSigma * kWindowSigma));
  }
  w /= w.sum();
  return w;
}

// separable valid-region convolution with the normalized Gaussian window
Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& img,
                             const Eigen::VectorXd& w) {
  const Eigen::Index rows = img.rows();
  const Eigen::Index cols = img.cols();
  const Eigen::Index out_cols = cols - kWindow + 1;
  Eigen::MatrixXd horiz(rows, out_cols);
  for (Eigen::Index c = 0; c < out_cols; ++c) {
    horiz.col(c) = img.middleCols(c, kWindow) * w;
  }
  const Eigen::Index out_rows = rows - kWindow + 1;
  Eigen::MatrixXd out(out_rows, out_cols);
  for (Eigen::Index r = 0; r < out_rows; ++r) {
    out.row(r) = w.transpose() * horiz.middleRows(r, kWindow);
  }
  return out;
}

double ssim_from_stats(double mu_x, double mu_y, double xx, double yy,
                       double xy) {
  const double var_x = xx - mu_x * mu_x;
  const double var_y = yy - mu_y * mu_y;
  const double cov = xy - mu_x * mu_y;
  return ((2.0 * mu_x * mu_y + kC1) * (2.0 * cov + kC2)) /
         ((mu_x * mu_x + mu_y * mu_y + kC1) * (var_x + var_y + kC2));
}

} // namespace

Eigen::MatrixXd band_image(const Cube& cube, std::uint32_t band) {
  if (band >= cube.bands) throw DimensionError("band index out of range");
  Eigen::MatrixXd img(cube.rows, cube.cols);
  const float* src = cube.band(band);
  for (std::uint32_t r = 0; r < cube.rows; ++r) {
    for (std::uint32_t c = 0; c < cube.cols; ++c) {
      img(r, c) = src[static_cast<std::size_t>(r) * cube.cols + c];
    }
  }
  return img;
}

double psnr(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& test,
            double peak) {
  if (reference.rows() != test.rows() || reference.cols() != test.cols()) {
    throw DimensionError("psnr: image shapes differ");
  }
  if (!(peak > 0.0)) throw Error("psnr: peak must be positive");
  const auto n = static_cast<std::size_t>(reference.size());
  const double mse = kernels::sq_diff_sum(reference.data(), test.data(), n) /
                     static_cast<double>(n);
  if (mse == 0.0) return 300.0;
  return std::min(10.0 * std::log10(peak * peak / mse), 300.0);
}

double ssim(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& test) {
  if (reference.rows() != test.rows() || reference.cols() != test.cols()) {
    throw DimensionError("ssim: image shapes differ");
  }
  if (reference.rows() < kWindow || reference.cols() < kWindow) {
    std::fprintf(stderr,
                 "ssim: image smaller than %dx%d window, using global "
                 "statistics\n",
                 kWindow, kWindow);
    const double n = static_cast<double>(reference.size());
    const double mu_x = reference.mean();
    const double mu_y = test.mean();
    const double xx = reference.cwiseAbs2().sum() / n;
    const double yy = test.cwiseAbs2().sum() / n;
    const double xy = reference.cwiseProduct(test).sum() / n;
    return ssim_from_stats(mu_x, mu_y, xx, yy, xy);
  }

  const Eigen::VectorXd w = ssim_window();
  const Eigen::MatrixXd mu_x = filter_valid(reference, w);
  const Eigen::MatrixXd mu_y = filter_valid(test, w);
  const Eigen::MatrixXd xx = filter_valid(reference.cwiseAbs2(), w);
  const Eigen::MatrixXd yy = filter_valid(test.cwiseAbs2(), w);
  const Eigen::MatrixXd xy = filter_valid(reference.cwiseProduct(test), w);

  double acc = 0.0;
  for (Eigen::Index c = 0; c < mu_x.cols(); ++c) {
    for (Eigen::Index r = 0; r < mu_x.rows(); ++r) {
      acc += ssim_from_stats(mu_x(r, c), mu_y(r, c), xx(r, c), yy(r, c),
                             xy(r, c));
    }
  }
  return acc / static_cast<double>(mu_x.size());
}

QualityReport evaluate(const Cube& reference, const Cube& test) {
  if (reference.rows != test.rows || reference.cols != test.cols ||
      reference.bands != test.bands) {
    throw DimensionError("evaluate: cube shapes differ");
  }
  const auto t_start = std::chrono::steady_clock::now();
  QualityReport report;
  report.psnr_per_band.resize(reference.bands);
  report.ssim_per_band.resize(reference.bands);
  parallel_for_each(reference.bands, [&](std::size_t bz) {
    const auto b = static_cast<std::uint32_t>(bz);
    const Eigen::MatrixXd ref = band_image(reference, b);
    const Eigen::MatrixXd img = band_image(test, b);
    report.psnr_per_band(static_cast<Eigen::Index>(bz)) = psnr(ref, img);
    report.ssim_per_band(static_cast<Eigen::Index>(bz)) = ssim(ref, img);
  });
  report.mpsnr = report.psnr_per_band.mean();
  report.mssim = report.ssim_per_band.mean();
  report.elapsed_seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - t_start)
                               .count();
  return report;
}

ObservationMatrix svd_baseline(const ObservationMatrix& y, int rank) {
  const Eigen::Index limit = std::min(y.n_pixels, y.n_bands);
  if (rank < 1 || rank > limit) {
    throw DimensionError("svd rank outside [1, min(N,B)]");
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(y.values,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  ObservationMatrix out(y.n_pixels, y.n_bands);
  out.values.noalias() = svd.matrixU().leftCols(rank) *
                         svd.singularValues().head(rank).asDiagonal() *
                         svd.matrixV().leftCols(rank).transpose();
  return out;
}

nlohmann::json quality_summary_json(const QualityReport& report) {
  return nlohmann::json{{"mpsnr", report.mpsnr},
                        {"mssim", report.mssim},
                        {"seconds", report.elapsed_seconds}};
}

void write_quality_csv(const QualityReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open CSV for writing: " + path);
  out << "band,psnr,ssim\n";
  char line[96];
  for (Eigen::Index b = 0; b < report.psnr_per_band.size(); ++b) {
    std::snprintf(line, sizeof(line), "%lld,%.10g,%.10g\n",
                  static_cast<long long>(b), report.psnr_per_band(b),
                  report.ssim_per_band(b));
    out << line;
  }
  if (!out) throw FormatError("write failed for CSV: " + path);
}

} // namespace nmog
