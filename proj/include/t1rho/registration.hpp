#pragma once

#include "t1rho/orientation.hpp"
#include "t1rho/types.hpp"
#include "t1rho/volume_ops.hpp"

namespace t1rho {

struct RegistrationConfig {
  int pyramid_levels = 3;        // coarse-to-fine, downsampling factor 2
  int max_iters_per_level = 8;   // coordinate-descent sweeps
  double rot_bound_deg = 30.0;
  double trans_bound_mm = 40.0;
  double tol_deg = 0.01;
  double tol_mm = 0.01;
  int threads = 0;               // 0 = hardware concurrency
};

/// Estimates the 6-parameter rigid transform (moving-world -> reference-world)
/// minimising mean-squared intensity difference over the reference grid.
/// Derivative-free coordinate descent with golden-section line search per
/// parameter, over a multiresolution pyramid. Deterministic for fixed config.
RigidTransform rigid_register(const Volume& moving, const Volume& reference,
                              const RegistrationConfig& config);

/// Mean-squared difference between resample(moving, reference, t) and the
/// reference, over reference voxels. Throws when fewer than 10% of reference
/// voxels map inside the moving field of view.
double registration_mse(const Volume& moving, const Volume& reference,
                        const RigidTransform& t, int stride = 1, int threads = 1);

struct StandardizationResult {
  DynamicSeries series;
  LabelVolume mask;
  OrientationOps orientation_ops;
  RigidTransform rigid;
};

/// Two-step standardisation: reorient series and mask to RAS+, then estimate
/// one rigid transform on the series mean against the reference and apply it
/// to every frame (trilinear) and the mask (nearest).
StandardizationResult standardize_case(const DynamicSeries& series,
                                       const LabelVolume& mask,
                                       const Volume& reference,
                                       const RegistrationConfig& config);

/// Box-average downsampling by factor 2 per axis (pyramid level builder).
Volume downsample2(const Volume& v);

}  // namespace t1rho
