// SPDX-License-Identifier: Apache-2.0
#ifndef NMOG_NOISE_SIM_HPP
#define NMOG_NOISE_SIM_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "nmog/cube.hpp"

#include <json.hpp>

namespace nmog {

enum class NoiseCase {
  iid_gaussian,
  noniid_gaussian,
  gaussian_stripe,
  gaussian_deadline,
  gaussian_impulse,
  mixture,
};

NoiseCase parse_noise_case(const std::string& name); // throws Error
std::string noise_case_name(NoiseCase kind);

struct NoiseSpec {
  NoiseCase kind = NoiseCase::iid_gaussian;
  double sigma = 0.05;            // case (1)
  double snr_lo_db = 5.0;         // cases (2)-(6)
  double snr_hi_db = 10.0;
  double affected_band_fraction = 0.25; // cases (3)-(5)
  int stripes_lo = 20;
  int stripes_hi = 40;
  int deadlines_lo = 5;
  int deadlines_hi = 15;
  double impulse_lo = 0.5;
  double impulse_hi = 0.7;
  std::uint64_t seed = 0;

  void validate() const;
};

struct StripeDraw {
  std::uint32_t col = 0;
  double offset = 0.0;
};

struct ImpulseCell {
  std::uint32_t index = 0; // row-major pixel index within the band
  float value = 0.0f;
};

struct BandCorruption {
  bool gaussian = false;
  double snr_db = std::numeric_limits<double>::quiet_NaN();
  double noise_sigma = 0.0;
  std::vector<StripeDraw> stripes;
  std::vector<std::uint32_t> deadline_cols;
  double impulse_fraction = 0.0;
  std::vector<ImpulseCell> impulse_cells;

  bool any() const {
    return gaussian || !stripes.empty() || !deadline_cols.empty() ||
           !impulse_cells.empty();
  }
};

struct NoiseMetadata {
  NoiseCase kind = NoiseCase::iid_gaussian;
  std::uint64_t seed = 0;
  double sigma = 0.05;
  std::vector<BandCorruption> bands;
};

/// Applies the selected corruption protocol; all draws are recorded in the
/// metadata. corrupt(clean, spec) == apply_structured(gaussian_stage(clean,
/// meta), meta) bit for bit.
std::pair<Cube, NoiseMetadata> corrupt(const Cube& clean,
                                       const NoiseSpec& spec);

/// Regenerates the per-band Gaussian stage from the metadata draws.
Cube gaussian_stage(const Cube& clean, const NoiseMetadata& meta);

/// Structured corruption only, fully determined by the metadata: stripe
/// offsets added, then impulse cells replaced, then deadline columns zeroed.
Cube apply_structured(const Cube& gaussian_noisy, const NoiseMetadata& meta);

/// 10*log10(var(clean band) / mean sq. error); capped at 300 dB; throws on
/// a zero-variance clean band.
double realized_snr(const Cube& clean, const Cube& noisy, std::uint32_t band);

void to_json(nlohmann::json& j, const NoiseMetadata& meta);
void from_json(const nlohmann::json& j, NoiseMetadata& meta);

} // namespace nmog

#endif
