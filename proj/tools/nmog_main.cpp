// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: synthetic corruption, denoising, the truncated-SVD
// baseline, quality evaluation and multi-seed experiments.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "nmog/cube.hpp"
#include "nmog/errors.hpp"
#include "nmog/inference.hpp"
#include "nmog/metrics.hpp"
#include "nmog/noise_sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw nmog::FormatError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw nmog::FormatError("write failed: " + path);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw nmog::FormatError("cannot open: " + path);
  json j;
  in >> j;
  return j;
}

struct SimulateArgs {
  std::string input;
  std::string case_name;
  std::uint64_t seed = 0;
  std::string output;
  std::string metadata;
  double sigma = 0.05;
  double snr_lo = 5.0;
  double snr_hi = 10.0;
  double band_fraction = 0.25;
};

int run_simulate(const SimulateArgs& args) {
  nmog::NoiseSpec spec;
  spec.kind = nmog::parse_noise_case(args.case_name);
  spec.seed = args.seed;
  spec.sigma = args.sigma;
  spec.snr_lo_db = args.snr_lo;
  spec.snr_hi_db = args.snr_hi;
  spec.affected_band_fraction = args.band_fraction;

  const nmog::Cube clean = nmog::load_cube(args.input);
  auto [noisy, meta] = nmog::corrupt(clean, spec);
  nmog::save_cube(noisy, args.output);
  json meta_json;
  nmog::to_json(meta_json, meta);
  const std::string meta_path =
      args.metadata.empty() ? args.output + ".meta.json" : args.metadata;
  write_json_file(meta_json, meta_path);
  return kExitOk;
}

struct DenoiseArgs {
  std::string input;
  std::string output;
  int rank = 20;
  int components = 3;
  int max_iters = 100;
  double tol = 1e-4;
  std::uint64_t seed = 0;
  std::string report;
  bool elbo = true;
  double prune_ratio = 1e4;
};

int run_denoise(const DenoiseArgs& args) {
  nmog::InferenceConfig cfg;
  cfg.hyper.rank_bound = args.rank;
  cfg.hyper.components = args.components;
  cfg.max_iters = args.max_iters;
  cfg.tol = args.tol;
  cfg.seed = args.seed;
  cfg.elbo_check = args.elbo;
  cfg.prune_ratio = args.prune_ratio;

  const nmog::Cube noisy = nmog::load_cube(args.input);
  auto [restored, report] = nmog::denoise(noisy, cfg);
  nmog::save_cube(restored, args.output);
  const std::string report_path =
      args.report.empty() ? args.output + ".report.json" : args.report;
  write_json_file(nmog::report_to_json(report), report_path);
  if (report.diverged) {
    std::cerr << "denoise: inference diverged: " << report.diagnostic << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

struct EvaluateArgs {
  std::string reference;
  std::string test;
  std::string csv;
  std::string json_path;
};

int run_evaluate(const EvaluateArgs& args) {
  const nmog::Cube reference = nmog::load_cube(args.reference);
  const nmog::Cube test = nmog::load_cube(args.test);
  const nmog::QualityReport report = nmog::evaluate(reference, test);
  const json summary = nmog::quality_summary_json(report);
  if (!args.csv.empty()) nmog::write_quality_csv(report, args.csv);
  if (!args.json_path.empty()) write_json_file(summary, args.json_path);
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

struct SvdArgs {
  std::string input;
  std::string output;
  int rank = 20;
};

// same normalize / restore envelope as denoise, so outputs are comparable
int run_svd(const SvdArgs& args) {
  const nmog::Cube noisy = nmog::load_cube(args.input);
  const std::size_t pixels = noisy.pixels();
  Eigen::VectorXd lo(noisy.bands), hi(noisy.bands);
  for (std::uint32_t b = 0; b < noisy.bands; ++b) {
    const float* src = noisy.band(b);
    float mn = src[0], mx = src[0];
    for (std::size_t i = 1; i < pixels; ++i) {
      mn = std::min(mn, src[i]);
      mx = std::max(mx, src[i]);
    }
    lo(b) = mn;
    hi(b) = mx;
  }
  const nmog::ObservationMatrix y =
      nmog::cube_to_matrix(nmog::normalize_bands(noisy));
  nmog::ObservationMatrix restored = nmog::svd_baseline(y, args.rank);
  for (Eigen::Index j = 0; j < restored.n_bands; ++j) {
    const double span = hi(j) - lo(j);
    restored.values.col(j) = (restored.values.col(j) * span).array() + lo(j);
  }
  restored.values = restored.values.cwiseMax(0.0).cwiseMin(1.0);
  nmog::save_cube(nmog::matrix_to_cube(restored, noisy.rows, noisy.cols),
                  args.output);
  return kExitOk;
}

struct ExperimentArgs {
  std::string plan_path;
};

int run_experiment(const ExperimentArgs& args) {
  const json plan = read_json_file(args.plan_path);
  const std::string clean_path = plan.at("clean").get<std::string>();
  const std::string case_name = plan.at("case").get<std::string>();
  const std::vector<std::uint64_t> seeds =
      plan.at("seeds").get<std::vector<std::uint64_t>>();
  const int components = plan.value("components", 3);
  const int rank = plan.value("rank", 20);
  const std::string output_dir = plan.at("output_dir").get<std::string>();
  const int max_iters = plan.value("max_iters", 100);
  const double tol = plan.value("tol", 1e-4);
  if (seeds.empty()) throw nmog::Error("experiment plan has no seeds");
  nmog::parse_noise_case(case_name); // validate early

  fs::create_directories(output_dir);
  const nmog::Cube clean = nmog::load_cube(clean_path);

  struct Accumulator {
    double mpsnr = 0.0;
    double mssim = 0.0;
    int count = 0;
    void add(const nmog::QualityReport& r) {
      mpsnr += r.mpsnr;
      mssim += r.mssim;
      ++count;
    }
  };
  Accumulator noisy_acc, svd_acc, nmog_acc;
  json per_seed = json::array();
  int failures = 0;

  for (const std::uint64_t seed : seeds) {
    const fs::path dir = fs::path(output_dir) / ("seed_" + std::to_string(seed));
    json entry{{"seed", seed}};
    try {
      fs::create_directories(dir);
      SimulateArgs sim;
      sim.input = clean_path;
      sim.case_name = case_name;
      sim.seed = seed;
      sim.output = (dir / "noisy.hsic").string();
      sim.metadata = (dir / "noise_meta.json").string();
      run_simulate(sim);

      DenoiseArgs den;
      den.input = sim.output;
      den.output = (dir / "denoised.hsic").string();
      den.rank = rank;
      den.components = components;
      den.max_iters = max_iters;
      den.tol = tol;
      den.seed = seed;
      den.report = (dir / "report.json").string();
      if (run_denoise(den) != kExitOk) {
        throw nmog::Error("denoise diverged for seed " + std::to_string(seed));
      }

      SvdArgs base;
      base.input = sim.output;
      base.output = (dir / "svd.hsic").string();
      base.rank = rank;
      run_svd(base);

      const nmog::Cube noisy = nmog::load_cube(sim.output);
      const nmog::Cube denoised = nmog::load_cube(den.output);
      const nmog::Cube svd_cube = nmog::load_cube(base.output);
      const nmog::QualityReport noisy_q = nmog::evaluate(clean, noisy);
      const nmog::QualityReport svd_q = nmog::evaluate(clean, svd_cube);
      const nmog::QualityReport nmog_q = nmog::evaluate(clean, denoised);
      nmog::write_quality_csv(noisy_q, (dir / "noisy_metrics.csv").string());
      nmog::write_quality_csv(svd_q, (dir / "svd_metrics.csv").string());
      nmog::write_quality_csv(nmog_q, (dir / "nmog_metrics.csv").string());
      noisy_acc.add(noisy_q);
      svd_acc.add(svd_q);
      nmog_acc.add(nmog_q);
      entry["status"] = "ok";
      entry["noisy"] = nmog::quality_summary_json(noisy_q);
      entry["svd"] = nmog::quality_summary_json(svd_q);
      entry["nmog"] = nmog::quality_summary_json(nmog_q);
    } catch (const std::exception& err) {
      entry["status"] = "failed";
      entry["error"] = err.what();
      ++failures;
      std::cerr << "experiment: seed " << seed << " failed: " << err.what()
                << "\n";
    }
    per_seed.push_back(std::move(entry));
  }

  json summary{{"case", case_name},
               {"seeds", seeds},
               {"components", components},
               {"rank", rank},
               {"failures", failures},
               {"runs", per_seed}};
  const auto mean_or_nan = [](const Accumulator& acc, bool ssim_field) {
    if (acc.count == 0) return std::numeric_limits<double>::quiet_NaN();
    return (ssim_field ? acc.mssim : acc.mpsnr) / acc.count;
  };
  summary["methods"] = {
      {"Noisy", {{"mpsnr", mean_or_nan(noisy_acc, false)},
                 {"mssim", mean_or_nan(noisy_acc, true)}}},
      {"SVD", {{"mpsnr", mean_or_nan(svd_acc, false)},
               {"mssim", mean_or_nan(svd_acc, true)}}},
      {"NMoG", {{"mpsnr", mean_or_nan(nmog_acc, false)},
                {"mssim", mean_or_nan(nmog_acc, true)}}}};
  write_json_file(summary, (fs::path(output_dir) / "summary.json").string());

  std::ofstream csv(fs::path(output_dir) / "summary.csv", std::ios::trunc);
  csv << "metric,Noisy,SVD,NMoG\n";
  char line[160];
  std::snprintf(line, sizeof(line), "mpsnr,%.6f,%.6f,%.6f\n",
                mean_or_nan(noisy_acc, false), mean_or_nan(svd_acc, false),
                mean_or_nan(nmog_acc, false));
  csv << line;
  std::snprintf(line, sizeof(line), "mssim,%.6f,%.6f,%.6f\n",
                mean_or_nan(noisy_acc, true), mean_or_nan(svd_acc, true),
                mean_or_nan(nmog_acc, true));
  csv << line;
  csv.flush();
  if (!csv) throw nmog::FormatError("write failed for summary.csv");

  std::cout << "experiment: " << seeds.size() - failures << "/" << seeds.size()
            << " seeds succeeded; summary in " << output_dir << "\n";
  return failures == 0 ? kExitOk : kExitRuntime;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperspectral denoiser: Bayesian low-rank factorization with a "
               "per-band mixture-of-Gaussians noise model"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Corrupt a clean cube with a synthetic noise protocol");
  simulate->add_option("--input", sim.input, "clean cube (.hsic)")->required();
  simulate->add_option("--case", sim.case_name,
                       "iid|noniid|stripe|deadline|impulse|mixture")
      ->required();
  simulate->add_option("--seed", sim.seed, "RNG seed");
  simulate->add_option("--output", sim.output, "noisy cube path")->required();
  simulate->add_option("--metadata", sim.metadata,
                       "metadata JSON path (default: <output>.meta.json)");
  simulate->add_option("--sigma", sim.sigma, "case-1 noise std");
  simulate->add_option("--snr-lo", sim.snr_lo, "per-band SNR lower bound (dB)");
  simulate->add_option("--snr-hi", sim.snr_hi, "per-band SNR upper bound (dB)");
  simulate->add_option("--band-fraction", sim.band_fraction,
                       "fraction of bands hit by structured noise");

  DenoiseArgs den;
  CLI::App* denoise_cmd =
      app.add_subcommand("denoise", "Run the variational denoiser");
  denoise_cmd->add_option("--input", den.input, "noisy cube")->required();
  denoise_cmd->add_option("--output", den.output, "denoised cube")->required();
  denoise_cmd->add_option("--rank", den.rank, "rank upper bound (pruned)");
  denoise_cmd->add_option("--components", den.components,
                          "Gaussian components per band");
  denoise_cmd->add_option("--max-iters", den.max_iters, "iteration cap");
  denoise_cmd->add_option("--tol", den.tol,
                          "relative reconstruction-change tolerance");
  denoise_cmd->add_option("--seed", den.seed, "RNG seed");
  denoise_cmd->add_option("--report", den.report,
                          "report JSON path (default: <output>.report.json)");
  denoise_cmd->add_flag("--elbo,!--no-elbo", den.elbo,
                        "track the evidence bound each iteration");
  denoise_cmd->add_option("--prune-ratio", den.prune_ratio,
                          "column-precision ratio that triggers pruning");

  EvaluateArgs eva;
  CLI::App* evaluate_cmd =
      app.add_subcommand("evaluate", "PSNR/SSIM of a cube against a reference");
  evaluate_cmd->add_option("--reference", eva.reference, "clean cube")
      ->required();
  evaluate_cmd->add_option("--test", eva.test, "cube under test")->required();
  evaluate_cmd->add_option("--csv", eva.csv, "per-band CSV output path");
  evaluate_cmd->add_option("--json", eva.json_path, "summary JSON output path");

  SvdArgs svd;
  CLI::App* svd_cmd =
      app.add_subcommand("svd", "Truncated-SVD baseline denoiser");
  svd_cmd->add_option("--input", svd.input, "noisy cube")->required();
  svd_cmd->add_option("--rank", svd.rank, "truncation rank")->required();
  svd_cmd->add_option("--output", svd.output, "output cube")->required();

  ExperimentArgs exp;
  CLI::App* experiment_cmd = app.add_subcommand(
      "experiment",
      "simulate -> denoise -> svd -> evaluate over a list of seeds");
  experiment_cmd->add_option("--plan", exp.plan_path, "experiment plan JSON")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) {
      try {
        nmog::parse_noise_case(sim.case_name);
      } catch (const nmog::Error& err) {
        std::cerr << err.what() << "\n\n" << simulate->help() << std::flush;
        return kExitUsage;
      }
      return run_simulate(sim);
    }
    if (denoise_cmd->parsed()) return run_denoise(den);
    if (evaluate_cmd->parsed()) return run_evaluate(eva);
    if (svd_cmd->parsed()) return run_svd(svd);
    if (experiment_cmd->parsed()) return run_experiment(exp);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
