// SPDX-License-Identifier: Apache-2.0
#include "nmog/noise_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nmog/errors.hpp"
#include "nmog/parallel.hpp"
#include "nmog/rng.hpp"

namespace nmog {

namespace {

// substream tags: one lane per (band, channel)
enum Channel : std::uint64_t { params = 0, gauss_field = 1, impulse_field = 2 };
constexpr std::uint64_t kGlobalTag = ~std::uint64_t{0};

std::uint64_t band_tag(std::uint32_t band, Channel ch) {
  return (static_cast<std::uint64_t>(band) << 2) | static_cast<std::uint64_t>(ch);
}

double band_variance(const Cube& cube, std::uint32_t band) {
  const float* src = cube.band(band);
  const std::size_t n = cube.pixels();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += src[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = src[i] - mean;
    var += d * d;
  }
  return var / static_cast<double>(n);
}

// first `count` elements of a seeded permutation of [0, total)
std::vector<std::uint32_t> draw_distinct(Rng& rng, std::uint32_t total,
                                         std::uint32_t count) {
  std::vector<std::uint32_t> pool(total);
  std::iota(pool.begin(), pool.end(), 0u);
  count = std::min(count, total);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t j =
        i + static_cast<std::uint32_t>(rng.integer(total - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

struct BandKinds {
  bool gaussian = false;
  bool stripe = false;
  bool deadline = false;
  bool impulse = false;
};

} // namespace

NoiseCase parse_noise_case(const std::string& name) {
  if (name == "iid") return NoiseCase::iid_gaussian;
  if (name == "noniid") return NoiseCase::noniid_gaussian;
  if (name == "stripe") return NoiseCase::gaussian_stripe;
  if (name == "deadline") return NoiseCase::gaussian_deadline;
  if (name == "impulse") return NoiseCase::gaussian_impulse;
  if (name == "mixture") return NoiseCase::mixture;
  throw Error("unknown noise case: " + name +
              " (expected iid|noniid|stripe|deadline|impulse|mixture)");
}

std::string noise_case_name(NoiseCase kind) {
  switch (kind) {
    case NoiseCase::iid_gaussian: return "iid";
    case NoiseCase::noniid_gaussian: return "noniid";
    case NoiseCase::gaussian_stripe: return "stripe";
    case NoiseCase::gaussian_deadline: return "deadline";
    case NoiseCase::gaussian_impulse: return "impulse";
    case NoiseCase::mixture: return "mixture";
  }
  throw Error("invalid noise case value");
}

void NoiseSpec::validate() const {
  if (!(sigma >= 0.0)) throw Error("sigma must be non-negative");
  if (snr_hi_db < snr_lo_db) throw Error("SNR range reversed");
  if (stripes_hi < stripes_lo || stripes_lo < 0) throw Error("stripe range invalid");
  if (deadlines_hi < deadlines_lo || deadlines_lo < 0) {
    throw Error("deadline range invalid");
  }
  if (!(impulse_lo >= 0.0 && impulse_hi <= 1.0 && impulse_lo <= impulse_hi)) {
    throw Error("impulse fraction range must sit inside [0,1]");
  }
  if (!(affected_band_fraction >= 0.0 && affected_band_fraction <= 1.0)) {
    throw Error("affected band fraction must sit inside [0,1]");
  }
}

std::pair<Cube, NoiseMetadata> corrupt(const Cube& clean,
                                       const NoiseSpec& spec) {
  clean.validate();
  spec.validate();
  const std::uint32_t bands = clean.bands;
  const std::uint32_t cols = clean.cols;
  const std::size_t pixels = clean.pixels();
  const Rng root(spec.seed);

  NoiseMetadata meta;
  meta.kind = spec.kind;
  meta.seed = spec.seed;
  meta.sigma = spec.sigma;
  meta.bands.resize(bands);

  // structured kinds per band for the single-kind cases, drawn from one
  // global stream so the subset does not depend on band count ordering
  std::vector<BandKinds> preset(bands);
  const bool snr_mode = spec.kind != NoiseCase::iid_gaussian;
  if (spec.kind != NoiseCase::mixture) {
    for (auto& flag : preset) flag.gaussian = true;
    if (spec.kind == NoiseCase::gaussian_stripe ||
        spec.kind == NoiseCase::gaussian_deadline ||
        spec.kind == NoiseCase::gaussian_impulse) {
      Rng global = root.substream(kGlobalTag);
      const auto affected_count = static_cast<std::uint32_t>(
          std::llround(spec.affected_band_fraction * bands));
      for (const std::uint32_t b : draw_distinct(global, bands, affected_count)) {
        if (spec.kind == NoiseCase::gaussian_stripe) preset[b].stripe = true;
        if (spec.kind == NoiseCase::gaussian_deadline) preset[b].deadline = true;
        if (spec.kind == NoiseCase::gaussian_impulse) preset[b].impulse = true;
      }
    }
  }

  // per-band parameter draws; the draw order inside the params stream is
  // fixed: kind flags (mixture only), snr, stripes, deadlines, impulse
  parallel_for_each(bands, [&](std::size_t bz) {
    const auto b = static_cast<std::uint32_t>(bz);
    Rng params = root.substream(band_tag(b, Channel::params));
    BandKinds flag = preset[b];
    if (spec.kind == NoiseCase::mixture) {
      // expected one kind per band, matching the structured-band share of
      // the single-kind cases; a band never ends up untouched
      flag.gaussian = params.uniform() < 0.25;
      flag.stripe = params.uniform() < 0.25;
      flag.deadline = params.uniform() < 0.25;
      flag.impulse = params.uniform() < 0.25;
      if (!flag.gaussian && !flag.stripe && !flag.deadline && !flag.impulse) {
        switch (params.integer(std::uint64_t{4})) {
          case 0: flag.gaussian = true; break;
          case 1: flag.stripe = true; break;
          case 2: flag.deadline = true; break;
          default: flag.impulse = true; break;
        }
      }
    }
    BandCorruption& record = meta.bands[b];

    if (flag.gaussian) {
      record.gaussian = true;
      if (snr_mode) {
        record.snr_db = params.uniform(spec.snr_lo_db, spec.snr_hi_db);
        const double var = band_variance(clean, b);
        record.noise_sigma =
            var > 0.0 ? std::sqrt(var / std::pow(10.0, record.snr_db / 10.0))
                      : 0.0;
      } else {
        record.noise_sigma = spec.sigma;
      }
    }
    if (flag.stripe) {
      const auto count = static_cast<std::uint32_t>(
          params.integer(spec.stripes_lo, spec.stripes_hi));
      for (const std::uint32_t col : draw_distinct(params, cols, count)) {
        record.stripes.push_back({col, params.uniform(-0.25, 0.25)});
      }
    }
    if (flag.deadline) {
      const auto count = static_cast<std::uint32_t>(
          params.integer(spec.deadlines_lo, spec.deadlines_hi));
      record.deadline_cols = draw_distinct(params, cols, count);
    }
    if (flag.impulse) {
      record.impulse_fraction = params.uniform(spec.impulse_lo, spec.impulse_hi);
      const auto count = static_cast<std::uint32_t>(
          std::llround(record.impulse_fraction * static_cast<double>(pixels)));
      Rng values = root.substream(band_tag(b, Channel::impulse_field));
      for (const std::uint32_t idx :
           draw_distinct(params, static_cast<std::uint32_t>(pixels), count)) {
        record.impulse_cells.push_back(
            {idx, static_cast<float>(values.uniform())});
      }
    }
  });

  Cube noisy = apply_structured(gaussian_stage(clean, meta), meta);
  return {std::move(noisy), std::move(meta)};
}

Cube gaussian_stage(const Cube& clean, const NoiseMetadata& meta) {
  if (meta.bands.size() != clean.bands) {
    throw DimensionError("metadata band count does not match cube");
  }
  const Rng root(meta.seed);
  Cube out = clean;
  parallel_for_each(clean.bands, [&](std::size_t bz) {
    const auto b = static_cast<std::uint32_t>(bz);
    const BandCorruption& record = meta.bands[b];
    if (!record.gaussian || record.noise_sigma == 0.0) return;
    Rng field = root.substream(band_tag(b, Channel::gauss_field));
    float* dst = out.band(b);
    const std::size_t n = clean.pixels();
    for (std::size_t i = 0; i < n; ++i) {
      dst[i] = static_cast<float>(static_cast<double>(dst[i]) +
                                  record.noise_sigma * field.normal());
    }
  });
  return out;
}

Cube apply_structured(const Cube& gaussian_noisy, const NoiseMetadata& meta) {
  if (meta.bands.size() != gaussian_noisy.bands) {
    throw DimensionError("metadata band count does not match cube");
  }
  Cube out = gaussian_noisy;
  const std::uint32_t rows = out.rows;
  const std::uint32_t cols = out.cols;
  parallel_for_each(out.bands, [&](std::size_t bz) {
    const auto b = static_cast<std::uint32_t>(bz);
    const BandCorruption& record = meta.bands[b];
    float* dst = out.band(b);
    for (const StripeDraw& stripe : record.stripes) {
      for (std::uint32_t r = 0; r < rows; ++r) {
        float& cell = dst[static_cast<std::size_t>(r) * cols + stripe.col];
        cell = static_cast<float>(static_cast<double>(cell) + stripe.offset);
      }
    }
    for (const ImpulseCell& cell : record.impulse_cells) {
      dst[cell.index] = cell.value;
    }
    for (const std::uint32_t col : record.deadline_cols) {
      for (std::uint32_t r = 0; r < rows; ++r) {
        dst[static_cast<std::size_t>(r) * cols + col] = 0.0f;
      }
    }
  });
  return out;
}

double realized_snr(const Cube& clean, const Cube& noisy, std::uint32_t band) {
  if (clean.rows != noisy.rows || clean.cols != noisy.cols ||
      clean.bands != noisy.bands) {
    throw DimensionError("clean/noisy shapes differ");
  }
  if (band >= clean.bands) throw DimensionError("band index out of range");
  const double var = band_variance(clean, band);
  if (var == 0.0) throw Error("SNR undefined for a zero-variance band");
  const float* a = clean.band(band);
  const float* b = noisy.band(band);
  const std::size_t n = clean.pixels();
  double mse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(b[i]) - static_cast<double>(a[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(n);
  if (mse == 0.0) return 300.0;
  return std::min(10.0 * std::log10(var / mse), 300.0);
}

void to_json(nlohmann::json& j, const NoiseMetadata& meta) {
  nlohmann::json bands = nlohmann::json::array();
  for (std::size_t b = 0; b < meta.bands.size(); ++b) {
    const BandCorruption& record = meta.bands[b];
    nlohmann::json entry{{"band", b}, {"gaussian", record.gaussian}};
    if (record.gaussian) {
      if (std::isfinite(record.snr_db)) entry["snr_db"] = record.snr_db;
      entry["noise_sigma"] = record.noise_sigma;
    }
    if (!record.stripes.empty()) {
      nlohmann::json stripes = nlohmann::json::array();
      for (const StripeDraw& s : record.stripes) {
        stripes.push_back({{"col", s.col}, {"offset", s.offset}});
      }
      entry["stripes"] = std::move(stripes);
    }
    if (!record.deadline_cols.empty()) entry["deadlines"] = record.deadline_cols;
    if (!record.impulse_cells.empty()) {
      entry["impulse_fraction"] = record.impulse_fraction;
      nlohmann::json cells = nlohmann::json::array();
      for (const ImpulseCell& cell : record.impulse_cells) {
        cells.push_back({cell.index, cell.value});
      }
      entry["impulse_cells"] = std::move(cells);
    }
    bands.push_back(std::move(entry));
  }
  j = nlohmann::json{{"case", noise_case_name(meta.kind)},
                     {"seed", meta.seed},
                     {"sigma", meta.sigma},
                     {"bands", std::move(bands)}};
}

void from_json(const nlohmann::json& j, NoiseMetadata& meta) {
  meta.kind = parse_noise_case(j.at("case").get<std::string>());
  meta.seed = j.at("seed").get<std::uint64_t>();
  meta.sigma = j.at("sigma").get<double>();
  meta.bands.clear();
  for (const auto& entry : j.at("bands")) {
    BandCorruption record;
    record.gaussian = entry.at("gaussian").get<bool>();
    if (entry.contains("snr_db")) record.snr_db = entry["snr_db"].get<double>();
    if (entry.contains("noise_sigma")) {
      record.noise_sigma = entry["noise_sigma"].get<double>();
    }
    if (entry.contains("stripes")) {
      for (const auto& s : entry["stripes"]) {
        record.stripes.push_back({s.at("col").get<std::uint32_t>(),
                                  s.at("offset").get<double>()});
      }
    }
    if (entry.contains("deadlines")) {
      record.deadline_cols =
          entry["deadlines"].get<std::vector<std::uint32_t>>();
    }
    if (entry.contains("impulse_cells")) {
      record.impulse_fraction = entry.value("impulse_fraction", 0.0);
      for (const auto& cell : entry["impulse_cells"]) {
        record.impulse_cells.push_back(
            {cell.at(0).get<std::uint32_t>(), cell.at(1).get<float>()});
      }
    }
    meta.bands.push_back(std::move(record));
  }
}

} // namespace nmog
