#pragma once

#include "t1rho/parcellation.hpp"
#include "t1rho/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace t1rho {

enum class FitModel { two_param, three_param };

struct FitConfig {
  double t1rho_min = 1.0;    // ms
  double t1rho_max = 300.0;  // ms
  double tol = 0.01;         // ms, search-interval convergence width
  FitModel model = FitModel::two_param;
  double intensity_floor = 0.0;
  int threads = 0;  // fit_map parallelism; 0 = hardware concurrency

  void validate() const {
    if (!(t1rho_min > 0 && t1rho_min < t1rho_max))
      throw config_error("fit bounds must satisfy 0 < t1rho_min < t1rho_max");
    if (!(tol > 0)) throw config_error("fit tol must be positive");
  }
};

struct FitResult {
  double t1rho = 0.0;  // ms
  double i0 = 0.0;
  double c = 0.0;      // 0 in the two-parameter model
  double rss = 0.0;
  bool converged = false;
  bool clamped = false;  // optimum at a search bound
};

// Voxel flags in the T1rhoMap flag volume.
enum FitFlag : int {
  kOutsideRegion = 0,
  kFitted = 1,
  kClamped = 2,
  kBelowFloor = 3,
};

struct T1rhoMap {
  Volume t1rho;  // ms, 0 outside the fitted region
  Volume i0;
  Volume rss;
  LabelVolume flags;
};

/// Mono-exponential relaxation model: i0 * exp(-tsl / t1rho) + c.
double predict_signal(double i0, double t1rho, double c, double tsl);

/// Bounded sectioning search over t1rho; the linear parameters are solved in
/// closed form by least squares against the basis exp(-tsl/t1rho) at each
/// candidate. A coarse 32-point pre-scan brackets the minimum before the
/// golden-section refinement.
FitResult fit_voxel(std::span<const double> intensities, std::span<const double> tsls,
                    const FitConfig& cfg);

/// Independent oracle: dense grid search over t1rho with the given step.
/// Test and verification use only.
FitResult fit_voxel_grid_search(std::span<const double> intensities,
                                std::span<const double> tsls, const FitConfig& cfg,
                                double step_ms);

/// Voxelwise fit over the nonzero voxels of `region`. Frames are re-sorted by
/// ascending tsl; per-voxel failures are recorded in the flag volume.
T1rhoMap fit_map(const DynamicSeries& series, const LabelVolume& region,
                 const FitConfig& cfg);

struct RegionStats {
  int region_code = 0;
  std::string region_name;
  std::size_t n = 0;           // converged, unclamped voxels
  std::size_t excluded_n = 0;  // clamped / non-converged / below-floor voxels
  double mean = 0, sd = 0, median = 0, min = 0, max = 0;  // defined when n > 0
};

/// Per-subregion statistics (codes 1..20) plus whole-compartment rows
/// (21 FC, 22 MTC, 23 LTC). Statistics cover converged, unclamped voxels.
std::vector<RegionStats> region_stats(const T1rhoMap& map,
                                      const SubregionVolume& subregions);

constexpr int kFCRow = 21, kMTCRow = 22, kLTCRow = 23;

}  // namespace t1rho
