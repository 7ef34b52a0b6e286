#pragma once

#include "t1rho/parcellation.hpp"
#include "t1rho/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace t1rho {

enum class NoiseModel { none, gaussian, rician };

/// Stylised knee phantom: a femoral shell dome over two tibial discs, on the
/// default acquisition grid (200x200x44 at 0.8x1x3 mm, tsl {0,50,30,10} in
/// scanning order).
struct PhantomSpec {
  Vec3i dims = Vec3i(200, 200, 44);
  Vec3 spacing = Vec3(0.8, 1.0, 3.0);
  std::vector<double> tsl_scan_order = {0.0, 50.0, 30.0, 10.0};

  // Geometry in world mm (grid centred on the origin).
  double femoral_radius_inner = 26.0;
  double femoral_radius_outer = 33.0;
  double femoral_max_polar_deg = 75.0;  // dome half-angle from +z
  Vec3 femoral_centre = Vec3(0.0, 0.0, 6.0);
  double tibial_radius = 16.0;
  double tibial_half_thickness = 5.0;
  double tibial_offset_x = 21.0;  // disc centres at +/- offset
  double tibial_top_z = -6.0;

  double t1rho_global = 40.0;  // ms; ignored when per-subregion values given
  std::optional<std::array<double, kNumSubregions>> t1rho_per_subregion;
  double i0 = 1000.0;
  double c = 0.0;
  NoiseModel noise = NoiseModel::none;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  RigidTransform misalignment;  // applied to series and mask jointly

  void validate() const;
};

struct PhantomTruth {
  SubregionVolume subregions;                          // pre-misalignment geometry
  std::array<double, kNumSubregions> t1rho_ms{};       // expected subregional means
};

struct PhantomCase {
  DynamicSeries series;
  LabelVolume mask;
  PhantomTruth truth;
};

/// Rasterises the phantom, synthesises the decay series frame by frame, adds
/// seeded noise, and applies the misalignment to series and mask jointly.
/// The truth table is computed from the unmisaligned geometry.
PhantomCase generate(const PhantomSpec& spec);

enum class MorphOp { erode, dilate };

/// Per-compartment 6-connectivity morphology; labels never bleed across
/// compartments (dilation claims background only, lower label wins).
LabelVolume perturb_mask(const LabelVolume& mask, MorphOp op, int radius_voxels);

PhantomSpec phantom_spec_from_json_file(const std::string& path);

}  // namespace t1rho
