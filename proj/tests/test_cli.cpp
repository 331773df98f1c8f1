// SPDX-License-Identifier: Apache-2.0
//
// Drives the installed binary through std::system; NMOG_CLI_PATH is baked
// in by the build.

#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "nmog/cube.hpp"
#include "nmog/noise_sim.hpp"
#include "oracles.hpp"

using namespace nmog;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kCli = NMOG_CLI_PATH;

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() /
          ("nmog_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Sandbox() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string path(const char* name) const { return (dir / name).string(); }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(kCli) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  json j;
  in >> j;
  return j;
}

} // namespace

TEST_CASE("simulate is deterministic and writes metadata") {
  Sandbox box;
  const Cube clean = oracle::planted_cube(24, 24, 8, 3, 500);
  save_cube(clean, box.path("clean.hsic"));
  const std::string base = "simulate --input " + box.path("clean.hsic") +
                           " --case noniid --seed 7";
  CHECK(run_cli(base + " --output " + box.path("a.hsic") + " --metadata " +
                box.path("a.json")) == 0);
  CHECK(run_cli(base + " --output " + box.path("b.hsic") + " --metadata " +
                box.path("b.json")) == 0);
  CHECK(slurp(box.path("a.hsic")) == slurp(box.path("b.hsic")));
  CHECK(slurp(box.path("a.json")) == slurp(box.path("b.json")));

  const json meta = read_json(box.path("a.json"));
  REQUIRE(meta.contains("bands"));
  for (const auto& band : meta["bands"]) {
    REQUIRE(band.contains("snr_db"));
    CHECK(band["snr_db"].get<double>() >= 5.0);
    CHECK(band["snr_db"].get<double>() <= 10.0);
  }
}

TEST_CASE("simulate rejects unknown case names with usage exit code") {
  Sandbox box;
  const Cube clean = oracle::planted_cube(8, 8, 4, 2, 501);
  save_cube(clean, box.path("clean.hsic"));
  CHECK(run_cli("simulate --input " + box.path("clean.hsic") +
                " --case salt --seed 1 --output " + box.path("x.hsic")) == 2);
  CHECK(run_cli("simulate --input " + box.path("clean.hsic") +
                " --output missing_case.hsic") == 2);
}

TEST_CASE("denoise recovers the planted rank and writes a report") {
  Sandbox box;
  const Cube clean = oracle::normalization_fixed_cube(24, 24, 10, 3, 502);
  save_cube(clean, box.path("clean.hsic"));
  const int status = run_cli(
      "denoise --input " + box.path("clean.hsic") + " --output " +
      box.path("out.hsic") + " --report " + box.path("report.json") +
      " --rank 8 --components 1 --max-iters 60 --tol 1e-10 --seed 3 "
      "--prune-ratio 100 --no-elbo");
  CHECK(status == 0);
  const json report = read_json(box.path("report.json"));
  CHECK(report["final_rank"].get<int>() == 3);
  const Cube out = load_cube(box.path("out.hsic"));
  CHECK(out.rows == 24);
  CHECK(out.bands == 10);
}

TEST_CASE("denoise with one component completes on iid input") {
  Sandbox box;
  const Cube clean = oracle::normalization_fixed_cube(16, 16, 6, 2, 503);
  save_cube(clean, box.path("clean.hsic"));
  CHECK(run_cli("simulate --input " + box.path("clean.hsic") +
                " --case iid --seed 2 --output " + box.path("noisy.hsic") +
                " --metadata " + box.path("meta.json")) == 0);
  CHECK(run_cli("denoise --input " + box.path("noisy.hsic") + " --output " +
                box.path("out.hsic") + " --report " + box.path("rep.json") +
                " --rank 4 --components 1 --max-iters 30 --seed 1 "
                "--no-elbo") == 0);
  const json report = read_json(box.path("rep.json"));
  REQUIRE(report.contains("bands"));
  CHECK(report["bands"][0]["pi"].size() == 1);
}

TEST_CASE("denoise on a missing input exits with a runtime error") {
  Sandbox box;
  CHECK(run_cli("denoise --input " + box.path("nope.hsic") + " --output " +
                box.path("out.hsic")) == 1);
}

TEST_CASE("evaluate of a cube against itself reports unit similarity") {
  Sandbox box;
  const Cube cube = oracle::planted_cube(20, 20, 6, 3, 504);
  save_cube(cube, box.path("ref.hsic"));
  CHECK(run_cli("evaluate --reference " + box.path("ref.hsic") + " --test " +
                box.path("ref.hsic") + " --csv " + box.path("m.csv") +
                " --json " + box.path("m.json")) == 0);
  const json summary = read_json(box.path("m.json"));
  CHECK(summary["mssim"].get<double>() == doctest::Approx(1.0));
  CHECK(summary["mpsnr"].get<double>() == 300.0);
  std::ifstream csv(box.path("m.csv"));
  std::string header;
  std::getline(csv, header);
  CHECK(header == "band,psnr,ssim");
}

TEST_CASE("svd subcommand writes a cube the evaluators accept") {
  Sandbox box;
  const Cube clean = oracle::planted_cube(16, 16, 8, 2, 505);
  save_cube(clean, box.path("clean.hsic"));
  CHECK(run_cli("svd --input " + box.path("clean.hsic") + " --rank 2 " +
                "--output " + box.path("svd.hsic")) == 0);
  const Cube rec = load_cube(box.path("svd.hsic"));
  CHECK(rec.bands == 8);
}

TEST_CASE("experiment aggregates seeds and emits the method columns") {
  Sandbox box;
  const Cube clean = oracle::normalization_fixed_cube(24, 24, 8, 2, 506);
  save_cube(clean, box.path("clean.hsic"));
  const json plan{{"clean", box.path("clean.hsic")},
                  {"case", "noniid"},
                  {"seeds", {1, 2, 3}},
                  {"components", 2},
                  {"rank", 3},
                  {"max_iters", 25},
                  {"output_dir", box.path("exp")}};
  {
    std::ofstream out(box.path("plan.json"));
    out << plan.dump(2);
  }
  CHECK(run_cli("experiment --plan " + box.path("plan.json")) == 0);

  std::ifstream csv(box.path("exp") + "/summary.csv");
  REQUIRE(csv);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "metric,Noisy,SVD,NMoG");

  const json summary = read_json(box.path("exp") + "/summary.json");
  CHECK(summary["runs"].size() == 3);
  for (const auto& run : summary["runs"]) {
    CHECK(run["status"] == "ok");
  }
  // mean equals the average of the per-seed values
  double nmog_mean = 0.0;
  for (const auto& run : summary["runs"]) {
    nmog_mean += run["nmog"]["mpsnr"].get<double>();
  }
  nmog_mean /= 3.0;
  CHECK(summary["methods"]["NMoG"]["mpsnr"].get<double>() ==
        doctest::Approx(nmog_mean).epsilon(1e-12));
}

TEST_CASE("missing required flags exit with usage code") {
  CHECK(run_cli("denoise") == 2);
  CHECK(run_cli("evaluate --reference only.hsic") == 2);
  CHECK(run_cli("") == 2);
}
