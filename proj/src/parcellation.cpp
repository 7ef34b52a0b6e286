#include "t1rho/parcellation.hpp"

#include "t1rho/orientation.hpp"
#include "t1rho/volume_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace t1rho {

const std::array<std::string, kNumSubregions + 1>& subregion_names() {
  static const std::array<std::string, kNumSubregions + 1> names = {
      "background", "aMFC", "ecMFC", "ccMFC", "icMFC", "pMFC",
      "aLFC",       "ecLFC", "ccLFC", "icLFC", "pLFC",
      "aMTC",       "eMTC",  "pMTC",  "iMTC",  "cMTC",
      "aLTC",       "eLTC",  "pLTC",  "iLTC",  "cLTC"};
  return names;
}

namespace {

struct CompartmentPoints {
  std::vector<std::size_t> linear;  // linear voxel indices
  std::vector<Eigen::Vector2d> xy;  // world (x, y) of voxel centres
};

struct Extent2d {
  double x_min = std::numeric_limits<double>::max();
  double x_max = std::numeric_limits<double>::lowest();
  double y_min = std::numeric_limits<double>::max();
  double y_max = std::numeric_limits<double>::lowest();
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
};

Extent2d extent_of(const CompartmentPoints& c) {
  Extent2d e;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (const auto& p : c.xy) {
    e.x_min = std::min(e.x_min, p[0]);
    e.x_max = std::max(e.x_max, p[0]);
    e.y_min = std::min(e.y_min, p[1]);
    e.y_max = std::max(e.y_max, p[1]);
    sum += p;
  }
  e.centroid = sum / static_cast<double>(c.xy.size());
  return e;
}

void require_standardised(const LabelVolume& mask) {
  if (!detect_orientation(mask.affine).identity())
    throw numeric_error("parcellation requires an RAS+-standardised mask");
}

// Tibial quadrant relative to the ellipse centre. Boundary angles (exactly
// 45 degrees) assign to anterior/posterior.
int tibial_code(const Eigen::Vector2d& p, const Eigen::Vector2d& centre,
                const Eigen::Vector2d& semi_axes, double interior_dir, int base) {
  const double dx = p[0] - centre[0], dy = p[1] - centre[1];
  bool central;
  if (semi_axes[0] <= 0 || semi_axes[1] <= 0) {
    central = dx == 0.0 && dy == 0.0;
  } else {
    double u = dx / semi_axes[0], v = dy / semi_axes[1];
    central = u * u + v * v <= 1.0;
  }
  if (central) return base + 4;                  // cMTC / cLTC
  if (dy >= std::abs(dx)) return base + 0;       // anterior
  if (-dy >= std::abs(dx)) return base + 2;      // posterior
  return dx * interior_dir > 0 ? base + 3 : base + 1;  // interior : exterior
}

}  // namespace

ParcellationLandmarks compute_landmarks(const LabelVolume& mask,
                                        const ParcellationConfig& config) {
  require_standardised(mask);

  CompartmentPoints fc, mtc, ltc;
  for (int k = 0; k < mask.dims[2]; ++k)
    for (int j = 0; j < mask.dims[1]; ++j)
      for (int i = 0; i < mask.dims[0]; ++i) {
        int label = mask.at(i, j, k);
        if (label != kFC && label != kMTC && label != kLTC) continue;
        Vec3 w = voxel_world(mask, i, j, k);
        CompartmentPoints& c = label == kFC ? fc : (label == kMTC ? mtc : ltc);
        c.linear.push_back(mask.index(i, j, k));
        c.xy.emplace_back(w[0], w[1]);
      }

  if (fc.xy.empty()) throw numeric_error("empty compartment: FC");
  ParcellationLandmarks lm;
  lm.mtc_empty = mtc.xy.empty();
  lm.ltc_empty = ltc.xy.empty();
  if (config.strict) {
    if (lm.mtc_empty) throw numeric_error("empty compartment: MTC");
    if (lm.ltc_empty) throw numeric_error("empty compartment: LTC");
  }

  Extent2d fce = extent_of(fc);
  if (!lm.mtc_empty && !lm.ltc_empty) {
    Extent2d me = extent_of(mtc), le = extent_of(ltc);
    if (std::abs(me.centroid[0] - le.centroid[0]) < 1.0)
      throw numeric_error("cannot separate medial/lateral: tibial centroids coincide");
    lm.mtc_centroid = Vec3(me.centroid[0], me.centroid[1], 0.0);
    lm.ltc_centroid = Vec3(le.centroid[0], le.centroid[1], 0.0);
    lm.ml_split_x = 0.5 * (me.centroid[0] + le.centroid[0]);
    lm.mtc_ap_extent = {me.y_min, me.y_max};
    lm.ltc_ap_extent = {le.y_min, le.y_max};
    lm.mtc_ellipse_centre = me.centroid;
    lm.mtc_ellipse_semi_axes =
        config.shape_factor *
        Eigen::Vector2d(0.5 * (me.x_max - me.x_min), 0.5 * (me.y_max - me.y_min));
    lm.ltc_ellipse_centre = le.centroid;
    lm.ltc_ellipse_semi_axes =
        config.shape_factor *
        Eigen::Vector2d(0.5 * (le.x_max - le.x_min), 0.5 * (le.y_max - le.y_min));
  } else {
    // Non-strict fallback: split at the FC centroid; the empty side's central
    // band later falls back to a 30/40/30 percentile split.
    lm.ml_split_x = fce.centroid[0];
    if (!lm.mtc_empty) {
      Extent2d me = extent_of(mtc);
      lm.mtc_centroid = Vec3(me.centroid[0], me.centroid[1], 0.0);
      lm.mtc_ap_extent = {me.y_min, me.y_max};
      lm.mtc_ellipse_centre = me.centroid;
      lm.mtc_ellipse_semi_axes =
          config.shape_factor *
          Eigen::Vector2d(0.5 * (me.x_max - me.x_min), 0.5 * (me.y_max - me.y_min));
      lm.ltc_centroid = Vec3(2 * lm.ml_split_x - me.centroid[0], me.centroid[1], 0.0);
    }
    if (!lm.ltc_empty) {
      Extent2d le = extent_of(ltc);
      lm.ltc_centroid = Vec3(le.centroid[0], le.centroid[1], 0.0);
      lm.ltc_ap_extent = {le.y_min, le.y_max};
      lm.ltc_ellipse_centre = le.centroid;
      lm.ltc_ellipse_semi_axes =
          config.shape_factor *
          Eigen::Vector2d(0.5 * (le.x_max - le.x_min), 0.5 * (le.y_max - le.y_min));
      lm.mtc_centroid = Vec3(2 * lm.ml_split_x - le.centroid[0], le.centroid[1], 0.0);
    }
    if (lm.mtc_empty && lm.ltc_empty)
      throw numeric_error("empty compartment: MTC and LTC");
  }
  return lm;
}

SubregionVolume parcellate(const LabelVolume& mask, const ParcellationConfig& config) {
  ParcellationLandmarks lm = compute_landmarks(mask, config);

  SubregionVolume out;
  out.dims = mask.dims;
  out.spacing = mask.spacing;
  out.affine = mask.affine;
  out.data = Eigen::ArrayXi::Zero(mask.data.size());

  const bool medial_is_low_x = lm.mtc_centroid[0] < lm.ltc_centroid[0];

  // FC voxels per side, split anterior/central/posterior by the same-side
  // tibial AP extent; central voxels kept for the thirds pass.
  struct CentralVoxel {
    std::size_t idx;
    double x;
  };
  std::array<std::vector<CentralVoxel>, 2> central;      // [medial, lateral]
  std::array<std::array<double, 2>, 2> fc_y_range = {{{1e300, -1e300}, {1e300, -1e300}}};
  std::array<std::vector<std::pair<std::size_t, Eigen::Vector2d>>, 2> fc_side;

  for (int k = 0; k < mask.dims[2]; ++k)
    for (int j = 0; j < mask.dims[1]; ++j)
      for (int i = 0; i < mask.dims[0]; ++i) {
        int label = mask.at(i, j, k);
        std::size_t idx = mask.index(i, j, k);
        Vec3 w = voxel_world(mask, i, j, k);
        Eigen::Vector2d p(w[0], w[1]);
        switch (label) {
          case kFC: {
            bool low_x = p[0] <= lm.ml_split_x;
            int side = (low_x == medial_is_low_x) ? 0 : 1;  // 0 medial, 1 lateral
            fc_side[side].emplace_back(idx, p);
            fc_y_range[side][0] = std::min(fc_y_range[side][0], p[1]);
            fc_y_range[side][1] = std::max(fc_y_range[side][1], p[1]);
            break;
          }
          case kMTC:
            out.data[static_cast<Eigen::Index>(idx)] =
                tibial_code(p, lm.mtc_ellipse_centre, lm.mtc_ellipse_semi_axes,
                            lm.ml_split_x > lm.mtc_ellipse_centre[0] ? 1.0 : -1.0,
                            kAMTC);
            break;
          case kLTC:
            out.data[static_cast<Eigen::Index>(idx)] =
                tibial_code(p, lm.ltc_ellipse_centre, lm.ltc_ellipse_semi_axes,
                            lm.ml_split_x > lm.ltc_ellipse_centre[0] ? 1.0 : -1.0,
                            kALTC);
            break;
          default:
            break;  // background and PC stay 0
        }
      }

  for (int side = 0; side < 2; ++side) {
    bool tibial_empty = side == 0 ? lm.mtc_empty : lm.ltc_empty;
    double y_min, y_max;
    if (!tibial_empty) {
      const auto& ext = side == 0 ? lm.mtc_ap_extent : lm.ltc_ap_extent;
      y_min = ext[0];
      y_max = ext[1];
    } else {
      // 30/40/30 percentile fallback over this side's own FC y-range.
      double lo = fc_y_range[side][0], hi = fc_y_range[side][1];
      y_min = lo + 0.3 * (hi - lo);
      y_max = lo + 0.7 * (hi - lo);
    }
    int base = side == 0 ? kAMFC : kALFC;  // a, ec, cc, ic, p
    for (const auto& [idx, p] : fc_side[side]) {
      if (p[1] > y_max)
        out.data[static_cast<Eigen::Index>(idx)] = base + 0;
      else if (p[1] < y_min)
        out.data[static_cast<Eigen::Index>(idx)] = base + 4;
      else
        central[side].push_back({idx, p[0]});
    }
  }

  // Central band split into equal-width x-thirds per side; exterior is the
  // band farthest from the medial/lateral split.
  for (int side = 0; side < 2; ++side) {
    auto& band = central[side];
    if (band.empty()) continue;
    double x_min = band.front().x, x_max = band.front().x;
    for (const auto& v : band) {
      x_min = std::min(x_min, v.x);
      x_max = std::max(x_max, v.x);
    }
    double w = x_max - x_min;
    bool low_x_is_exterior = (side == 0) == medial_is_low_x;
    int base = side == 0 ? kAMFC : kALFC;
    for (const auto& v : band) {
      int third;
      if (w == 0.0)
        third = 1;
      else if (v.x <= x_min + w / 3.0)  // ties to the lower band
        third = 0;
      else if (v.x <= x_min + 2.0 * w / 3.0)
        third = 1;
      else
        third = 2;
      int code;
      if (third == 1)
        code = base + 2;  // cc
      else if ((third == 0) == low_x_is_exterior)
        code = base + 1;  // ec
      else
        code = base + 3;  // ic
      out.data[static_cast<Eigen::Index>(v.idx)] = code;
    }
  }
  return out;
}

}  // namespace t1rho
