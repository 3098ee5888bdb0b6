#pragma once

#include "covkern/kernels.hpp"
#include "covkern/simulation.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace covkern {

//! Log-spaced bandwidth grid expressed as multiples of the SD of the raster's
//! cell values.
struct HGridSpec {
  double lo_factor = 0.02;
  double hi_factor = 2.0;
  std::size_t count = 80;
};

struct BenchmarkConfig {
  std::vector<int> models{1};
  std::vector<double> m_values{50.0, 100.0};
  std::size_t replicates = 100;
  //! Any of silverman, rt, boot, cv.
  std::vector<std::string> selectors{"silverman", "rt", "boot", "cv"};
  bool guan = true;
  std::uint64_t seed = 20240601;
  std::string kernel = "gaussian";
  std::size_t n_z = 513;
  bool exact_a = false;
  GRFSpec grf{};
  HGridSpec h_grid{};
  std::size_t cv_points = 40;
  double cv_decades = 2.0;
  unsigned threads = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const BenchmarkConfig& c);
//! Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, BenchmarkConfig& c);

//! Summary of one bandwidth column. Column names: mise, silverman, rt, boot,
//! cv, mise_guan, cv_guan.
struct SelectorSummary {
  std::string column;
  double e1 = 0.0;
  double e2 = 0.0;
  double e3 = 0.0;
  double e1_se = 0.0; // e2 / sqrt(used)
  double e3_se = 0.0;
  double mean_h = 0.0;
  std::size_t used = 0;
  std::size_t failures = 0;
  std::size_t boundary_hits = 0;
};

struct CellResult {
  int model = 1;
  double m = 0.0;
  std::size_t replicates = 0;
  std::size_t failed_replicates = 0; // events in negligible covariate mass, or N = 0
  double mean_n = 0.0;
  double h_mise = 0.0;
  double h_mise_guan = 0.0;
  std::vector<SelectorSummary> columns;
  //! Shared bandwidth grid with the Monte Carlo mean of \int (f_hat_h - f)^2
  //! and of Guan's ISE_rel at each point.
  std::vector<double> h_grid;
  std::vector<double> mise_curve;
  std::vector<double> guan_ise_curve;

  const SelectorSummary* find(const std::string& column) const;
};

struct BenchmarkResult {
  BenchmarkConfig config;
  std::vector<CellResult> cells;
};

BenchmarkResult run_benchmark(const BenchmarkConfig& config);

//! Rows `model,m,criterion,h_MISE,h_Silv,h_RT,h_Boot,h_CV,h_MISE_Guan,h_CV_Guan`
//! with criterion in {e1, e2, e3}; columns not run are NA.
void write_benchmark_csv(const BenchmarkResult& result, std::ostream& out);
nlohmann::json benchmark_json(const BenchmarkResult& result);

} // namespace covkern
