// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "nmog/errors.hpp"
#include "nmog/metrics.hpp"
#include "nmog/rng.hpp"
#include "oracles.hpp"

using namespace nmog;

namespace {

Eigen::MatrixXd random_image(Eigen::Index rows, Eigen::Index cols,
                             std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd img(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) img(r, c) = rng.uniform();
  return img;
}

} // namespace

TEST_CASE("psnr: identical images hit the cap") {
  const Eigen::MatrixXd img = random_image(16, 16, 1);
  CHECK(psnr(img, img) == 300.0);
}

TEST_CASE("psnr: +0.1 offset is 20 dB") {
  const Eigen::MatrixXd img = random_image(32, 32, 2);
  const Eigen::MatrixXd shifted = img.array() + 0.1;
  CHECK(psnr(img, shifted) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("psnr: +0.05 offset lands at the sigma=0.05 noisy level") {
  const Eigen::MatrixXd img = random_image(64, 64, 3);
  const Eigen::MatrixXd shifted = img.array() + 0.05;
  CHECK(psnr(img, shifted) == doctest::Approx(26.0206).epsilon(1e-4));
}

TEST_CASE("psnr: shape mismatch and bad peak are rejected") {
  const Eigen::MatrixXd a = random_image(4, 4, 4);
  const Eigen::MatrixXd b = random_image(4, 5, 5);
  CHECK_THROWS_AS(psnr(a, b), DimensionError);
  CHECK_THROWS_AS(psnr(a, a, 0.0), Error);
}

TEST_CASE("psnr is invariant under a joint pixel permutation") {
  const Eigen::MatrixXd a = random_image(8, 8, 6);
  const Eigen::MatrixXd b = random_image(8, 8, 7);
  Eigen::MatrixXd pa = a, pb = b;
  // reverse both images identically
  pa.colwise().reverseInPlace();
  pb.colwise().reverseInPlace();
  CHECK(psnr(pa, pb) == doctest::Approx(psnr(a, b)).epsilon(1e-14));
}

TEST_CASE("ssim: identical and constant images score one") {
  const Eigen::MatrixXd img = random_image(32, 32, 8);
  CHECK(ssim(img, img) == doctest::Approx(1.0).epsilon(1e-12));
  const Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(32, 32, 0.5);
  CHECK(ssim(flat, flat) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim matches the definitional oracle") {
  Rng rng(9);
  for (int trial = 0; trial < 6; ++trial) {
    const Eigen::MatrixXd a = random_image(32, 32, 100 + trial);
    Eigen::MatrixXd b = a;
    for (Eigen::Index c = 0; c < b.cols(); ++c)
      for (Eigen::Index r = 0; r < b.rows(); ++r)
        b(r, c) = std::clamp(b(r, c) + rng.uniform(-0.2, 0.2), 0.0, 1.0);
    CHECK(ssim(a, b) ==
          doctest::Approx(oracle::ssim_reference(a, b)).epsilon(1e-6));
  }
}

TEST_CASE("ssim is symmetric and bounded") {
  for (int trial = 0; trial < 4; ++trial) {
    const Eigen::MatrixXd a = random_image(20, 24, 200 + trial);
    const Eigen::MatrixXd b = random_image(20, 24, 300 + trial);
    const double ab = ssim(a, b);
    CHECK(ab == doctest::Approx(ssim(b, a)).epsilon(1e-14));
    CHECK(ab >= -1.0);
    CHECK(ab <= 1.0);
  }
}

TEST_CASE("ssim falls back to global statistics below the window size") {
  const Eigen::MatrixXd a = random_image(8, 8, 40);
  const Eigen::MatrixXd b = random_image(8, 8, 41);
  const double got = ssim(a, b);
  // global-statistics value computed directly
  const double n = 64.0;
  const double mx = a.mean(), my = b.mean();
  const double vx = a.cwiseAbs2().sum() / n - mx * mx;
  const double vy = b.cwiseAbs2().sum() / n - my * my;
  const double cov = a.cwiseProduct(b).sum() / n - mx * my;
  const double want = ((2 * mx * my + 1e-4) * (2 * cov + 9e-4)) /
                      ((mx * mx + my * my + 1e-4) * (vx + vy + 9e-4));
  CHECK(got == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("evaluate: self comparison and mean identities") {
  const Cube cube = oracle::planted_cube(16, 16, 5, 2, 50);
  const QualityReport self = evaluate(cube, cube);
  CHECK(self.mpsnr == 300.0);
  CHECK(self.mssim == doctest::Approx(1.0).epsilon(1e-12));

  const Cube other = oracle::planted_cube(16, 16, 5, 3, 51);
  const QualityReport q = evaluate(cube, other);
  CHECK(q.mpsnr ==
        doctest::Approx(q.psnr_per_band.mean()).epsilon(1e-14));
  CHECK(q.mssim ==
        doctest::Approx(q.ssim_per_band.mean()).epsilon(1e-14));
  CHECK(q.psnr_per_band.size() == 5);
}

TEST_CASE("evaluate rejects shape mismatches") {
  const Cube a = oracle::planted_cube(8, 8, 3, 2, 52);
  const Cube b = oracle::planted_cube(8, 8, 4, 2, 53);
  CHECK_THROWS_AS(evaluate(a, b), DimensionError);
}

TEST_CASE("svd baseline: exactness, identity and rank checks") {
  Rng rng(60);
  ObservationMatrix rank1(12, 6);
  Eigen::VectorXd u(12), v(6);
  for (int i = 0; i < 12; ++i) u(i) = rng.uniform(0.1, 1.0);
  for (int j = 0; j < 6; ++j) v(j) = rng.uniform(0.1, 1.0);
  rank1.values = u * v.transpose();
  const ObservationMatrix rec = svd_baseline(rank1, 1);
  CHECK((rec.values - rank1.values).norm() / rank1.values.norm() < 1e-10);

  ObservationMatrix full(7, 5);
  full.values = random_image(7, 5, 61);
  const ObservationMatrix id = svd_baseline(full, 5);
  CHECK((id.values - full.values).norm() / full.values.norm() < 1e-12);

  CHECK_THROWS_AS(svd_baseline(full, 0), DimensionError);
  CHECK_THROWS_AS(svd_baseline(full, 6), DimensionError);
}

TEST_CASE("svd baseline residual equals the discarded singular values") {
  ObservationMatrix y(20, 10);
  y.values = random_image(20, 10, 62);
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(y.values);
  const Eigen::VectorXd sv = svd.singularValues();
  double prev_residual = 1e300;
  for (const int rank : {1, 3, 5, 9}) {
    const ObservationMatrix rec = svd_baseline(y, rank);
    const double residual = (y.values - rec.values).norm();
    const double want = std::sqrt(sv.tail(10 - rank).squaredNorm());
    CHECK(residual == doctest::Approx(want).epsilon(1e-10));
    CHECK(residual <= prev_residual + 1e-12); // non-increasing in rank
    prev_residual = residual;
  }
}

TEST_CASE("quality report serialization") {
  const Cube cube = oracle::planted_cube(12, 12, 4, 2, 70);
  const Cube other = oracle::planted_cube(12, 12, 4, 2, 71);
  const QualityReport q = evaluate(cube, other);
  const nlohmann::json j = quality_summary_json(q);
  CHECK(j.contains("mpsnr"));
  CHECK(j.contains("mssim"));
  CHECK(j.contains("seconds"));

  const auto path =
      (std::filesystem::temp_directory_path() / "metrics_test.csv").string();
  write_quality_csv(q, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "band,psnr,ssim");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 4);
}
