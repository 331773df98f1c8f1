// SPDX-License-Identifier: Apache-2.0
#include "nmog/cube.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "nmog/errors.hpp"

namespace nmog {

namespace {

constexpr char kMagic[4] = {'H', 'S', 'I', 'C'};

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32_le(std::uint32_t v, unsigned char* p) {
  p[0] = static_cast<unsigned char>(v & 0xff);
  p[1] = static_cast<unsigned char>((v >> 8) & 0xff);
  p[2] = static_cast<unsigned char>((v >> 16) & 0xff);
  p[3] = static_cast<unsigned char>((v >> 24) & 0xff);
}

float float_from_le(const unsigned char* p) {
  return std::bit_cast<float>(read_u32_le(p));
}

void float_to_le(float v, unsigned char* p) {
  write_u32_le(std::bit_cast<std::uint32_t>(v), p);
}

} // namespace

void Cube::validate() const {
  if (rows == 0 || cols == 0 || bands == 0) {
    throw DimensionError("cube has a zero dimension");
  }
  if (data.size() != size()) {
    throw DimensionError("cube payload length does not match dimensions");
  }
  for (const float v : data) {
    if (!std::isfinite(v)) throw FormatError("cube contains non-finite values");
  }
}

Cube load_cube(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open cube file: " + path);

  unsigned char header[16];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(header))) {
    throw FormatError("cube file too short for header: " + path);
  }
  if (std::memcmp(header, kMagic, 4) != 0) {
    throw FormatError("bad magic in cube file: " + path);
  }

  Cube cube;
  cube.rows = read_u32_le(header + 4);
  cube.cols = read_u32_le(header + 8);
  cube.bands = read_u32_le(header + 12);
  if (cube.rows == 0 || cube.cols == 0 || cube.bands == 0) {
    throw FormatError("zero dimension in cube header: " + path);
  }

  const std::size_t count = cube.size();
  std::vector<unsigned char> raw(count * 4);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw FormatError("cube payload shorter than header promises: " + path);
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw FormatError("trailing bytes after cube payload: " + path);
  }

  cube.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    cube.data[i] = float_from_le(raw.data() + i * 4);
    if (!std::isfinite(cube.data[i])) {
      throw FormatError("non-finite value in cube payload: " + path);
    }
  }
  return cube;
}

void save_cube(const Cube& cube, const std::string& path) {
  cube.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open cube file for writing: " + path);

  unsigned char header[16];
  std::memcpy(header, kMagic, 4);
  write_u32_le(cube.rows, header + 4);
  write_u32_le(cube.cols, header + 8);
  write_u32_le(cube.bands, header + 12);
  out.write(reinterpret_cast<const char*>(header), sizeof(header));

  std::vector<unsigned char> raw(cube.data.size() * 4);
  for (std::size_t i = 0; i < cube.data.size(); ++i) {
    float_to_le(cube.data[i], raw.data() + i * 4);
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  out.flush();
  if (!out) throw FormatError("write failed for cube file: " + path);
}

Cube normalize_bands(const Cube& cube) {
  cube.validate();
  Cube out = cube;
  const std::size_t n = cube.pixels();
  for (std::uint32_t b = 0; b < cube.bands; ++b) {
    const float* src = cube.band(b);
    float* dst = out.band(b);
    float lo = src[0];
    float hi = src[0];
    for (std::size_t i = 1; i < n; ++i) {
      lo = std::min(lo, src[i]);
      hi = std::max(hi, src[i]);
    }
    if (hi == lo) {
      std::memset(dst, 0, n * sizeof(float));
      continue;
    }
    const float span = hi - lo;
    for (std::size_t i = 0; i < n; ++i) dst[i] = (src[i] - lo) / span;
  }
  return out;
}

ObservationMatrix cube_to_matrix(const Cube& cube) {
  cube.validate();
  ObservationMatrix m(static_cast<Eigen::Index>(cube.pixels()),
                      static_cast<Eigen::Index>(cube.bands));
  for (std::uint32_t b = 0; b < cube.bands; ++b) {
    const float* src = cube.band(b);
    double* dst = m.values.col(b).data();
    for (std::size_t i = 0; i < cube.pixels(); ++i) {
      dst[i] = static_cast<double>(src[i]);
    }
  }
  return m;
}

Cube matrix_to_cube(const ObservationMatrix& m, std::uint32_t rows,
                    std::uint32_t cols) {
  if (static_cast<Eigen::Index>(rows) * cols != m.n_pixels) {
    throw DimensionError("rows*cols does not match matrix pixel count");
  }
  Cube cube(rows, cols, static_cast<std::uint32_t>(m.n_bands));
  for (Eigen::Index b = 0; b < m.n_bands; ++b) {
    const double* src = m.values.col(b).data();
    float* dst = cube.band(static_cast<std::uint32_t>(b));
    for (Eigen::Index i = 0; i < m.n_pixels; ++i) {
      dst[i] = static_cast<float>(src[i]);
    }
  }
  return cube;
}

} // namespace nmog
