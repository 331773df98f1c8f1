// SPDX-License-Identifier: Apache-2.0
#ifndef NMOG_CUBE_HPP
#define NMOG_CUBE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace nmog {

// Hyperspectral cube, rows x cols x bands. Storage order matches the file
// payload: band-major, row-major within a band, so band b starts at
// data[b * rows * cols].
struct Cube {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::uint32_t bands = 0;
  std::vector<float> data;

  Cube() = default;
  Cube(std::uint32_t r, std::uint32_t c, std::uint32_t b)
      : rows(r), cols(c), bands(b),
        data(static_cast<std::size_t>(r) * c * b, 0.0f) {}

  std::size_t pixels() const {
    return static_cast<std::size_t>(rows) * cols;
  }
  std::size_t size() const { return pixels() * bands; }

  float& at(std::uint32_t r, std::uint32_t c, std::uint32_t b) {
    return data[static_cast<std::size_t>(b) * pixels() +
                static_cast<std::size_t>(r) * cols + c];
  }
  float at(std::uint32_t r, std::uint32_t c, std::uint32_t b) const {
    return data[static_cast<std::size_t>(b) * pixels() +
                static_cast<std::size_t>(r) * cols + c];
  }

  const float* band(std::uint32_t b) const {
    return data.data() + static_cast<std::size_t>(b) * pixels();
  }
  float* band(std::uint32_t b) {
    return data.data() + static_cast<std::size_t>(b) * pixels();
  }

  /// Throws on zero dimensions, length mismatch or non-finite values.
  void validate() const;
};

// N x B matrix view of a cube: column j is band j flattened row-major.
struct ObservationMatrix {
  Eigen::Index n_pixels = 0;
  Eigen::Index n_bands = 0;
  Eigen::MatrixXd values; // N x B, column-major

  ObservationMatrix() = default;
  ObservationMatrix(Eigen::Index n, Eigen::Index b)
      : n_pixels(n), n_bands(b), values(Eigen::MatrixXd::Zero(n, b)) {}
};

/// Reads a cube file ("HSIC" magic, u32 LE dims, f32 LE payload).
Cube load_cube(const std::string& path);

/// Writes the bit-exact inverse of load_cube.
void save_cube(const Cube& cube, const std::string& path);

/// Per-band affine map onto [0,1]; constant bands map to all zeros.
Cube normalize_bands(const Cube& cube);

ObservationMatrix cube_to_matrix(const Cube& cube);

Cube matrix_to_cube(const ObservationMatrix& m, std::uint32_t rows,
                    std::uint32_t cols);

} // namespace nmog

#endif
