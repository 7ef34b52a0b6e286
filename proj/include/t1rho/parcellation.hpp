#pragma once

#include "t1rho/types.hpp"

#include <array>
#include <string>

namespace t1rho {

// Subregion codebook. Femoral: anterior / exterior-central / central-central /
// interior-central / posterior per side; tibial: anterior / exterior /
// posterior / interior / central per compartment.
enum SubregionCode : int {
  kAMFC = 1, kEcMFC = 2, kCcMFC = 3, kIcMFC = 4, kPMFC = 5,
  kALFC = 6, kEcLFC = 7, kCcLFC = 8, kIcLFC = 9, kPLFC = 10,
  kAMTC = 11, kEMTC = 12, kPMTC = 13, kIMTC = 14, kCMTC = 15,
  kALTC = 16, kELTC = 17, kPLTC = 18, kILTC = 19, kCLTC = 20,
};

constexpr int kNumSubregions = 20;

const std::array<std::string, kNumSubregions + 1>& subregion_names();

struct ParcellationConfig {
  double shape_factor = 0.45;  // tibial central ellipse semi-axes vs half-extent
  bool strict = true;          // error on degenerate anatomy instead of fallback
};

struct ParcellationLandmarks {
  Vec3 mtc_centroid = Vec3::Zero();
  Vec3 ltc_centroid = Vec3::Zero();
  double ml_split_x = 0.0;                         // mm
  std::array<double, 2> mtc_ap_extent = {0, 0};    // [y_min, y_max] mm
  std::array<double, 2> ltc_ap_extent = {0, 0};
  Eigen::Vector2d mtc_ellipse_centre = Eigen::Vector2d::Zero();
  Eigen::Vector2d mtc_ellipse_semi_axes = Eigen::Vector2d::Zero();
  Eigen::Vector2d ltc_ellipse_centre = Eigen::Vector2d::Zero();
  Eigen::Vector2d ltc_ellipse_semi_axes = Eigen::Vector2d::Zero();
  bool mtc_empty = false;  // set only with strict mode off
  bool ltc_empty = false;
};

/// Computes medial/lateral split, tibial AP extents and central ellipses from
/// a standardised (RAS+) mask. All geometry is in world mm.
ParcellationLandmarks compute_landmarks(const LabelVolume& mask,
                                        const ParcellationConfig& config = {});

/// Partitions FC (10), MTC (5), and LTC (5) into the 20-subregion codebook.
/// PC voxels pass through as 0.
SubregionVolume parcellate(const LabelVolume& mask,
                           const ParcellationConfig& config = {});

}  // namespace t1rho
