// SPDX-License-Identifier: Apache-2.0
#ifndef NMOG_INFERENCE_HPP
#define NMOG_INFERENCE_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "nmog/cube.hpp"
#include "nmog/lowrank.hpp"
#include "nmog/noise_model.hpp"

#include <json.hpp>

namespace nmog {

struct IterationView;
using IterationObserver = std::function<void(const IterationView&)>;

struct InferenceConfig {
  Hyperparams hyper;
  int max_iters = 100;
  double tol = 1e-4; // relative Frobenius change of the reconstruction
  std::uint64_t seed = 0;
  bool elbo_check = true;
  double prune_ratio = 1e4;
  int prune_start_iter = 5;
  // mixture means stay at the prior location until this iteration; keeps
  // the covariance-tempered early sweeps from parking band offsets in the
  // noise means
  int mean_warmup_iters = 10;
  IterationObserver observer; // optional per-iteration hook

  void validate() const;
};

struct BandNoiseSummary {
  std::vector<double> mixing;    // posterior mean of pi
  std::vector<double> mean;      // m_jk
  std::vector<double> precision; // <tau_jk>
};

struct InferenceReport {
  int iterations_run = 0;
  int final_rank = 0;
  std::vector<double> elbo_trace;
  bool converged = false;
  bool diverged = false;
  std::string diagnostic;
  std::vector<BandNoiseSummary> bands;
  double seconds = 0.0;
};

struct InferenceResult {
  FactorState factors;
  ArdPosterior ard;
  NoiseState noise;
  InferenceReport report;
};

// Read-only view handed to the per-iteration observer.
struct IterationView {
  int iteration;
  const FactorState& factors;
  const ArdPosterior& ard;
  const NoiseState& noise;
  double elbo; // NaN when elbo_check is off
  double recon_rel_change;
};

/// Full coordinate-ascent loop. Divergence does not throw: the result
/// carries the last finite state with report.diverged set.
InferenceResult run(const ObservationMatrix& y, const InferenceConfig& cfg);

/// normalize -> infer -> map the reconstruction back to the input band
/// scale -> clip to [0,1].
std::pair<Cube, InferenceReport> denoise(const Cube& cube,
                                         const InferenceConfig& cfg);

/// Variational evidence lower bound of the given state. The ARD posterior
/// enters at its coordinate optimum for `factors`, which is exactly the
/// in-loop state after the gamma update.
double compute_elbo(const ObservationMatrix& y, const FactorState& factors,
                    const NoiseState& noise, const Hyperparams& hyper);

nlohmann::json report_to_json(const InferenceReport& report);

} // namespace nmog

#endif
