#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "t1rho/parcellation.hpp"
#include "t1rho/phantom.hpp"
#include "t1rho/volume_ops.hpp"

#include <set>

using namespace t1rho;

namespace {

LabelVolume make_grid(Vec3i dims, Vec3 origin) {
  LabelVolume m;
  m.dims = dims;
  m.spacing = Vec3::Ones();
  m.affine = Mat4::Identity();
  m.affine.topRightCorner<3, 1>() = origin;
  m.data = Eigen::ArrayXi::Zero(dims.prod());
  return m;
}

// Two tibial discs of radius `r` at x = +/-20 (z slices 0..1) and an FC slab
// over them (z slices 4..5).
LabelVolume two_disc_scene(double r = 8.0, bool with_fc = true,
                           double fc_y_lo = -15.0, double fc_y_hi = 15.0) {
  LabelVolume m = make_grid(Vec3i(61, 41, 8), Vec3(-30, -20, 0));
  for (int k = 0; k < m.dims[2]; ++k)
    for (int j = 0; j < m.dims[1]; ++j)
      for (int i = 0; i < m.dims[0]; ++i) {
        Vec3 w = voxel_world(m, i, j, k);
        double x = w[0], y = w[1];
        if (k <= 1) {
          for (double cx : {-20.0, 20.0}) {
            double dx = x - cx;
            if (dx * dx + y * y <= r * r) m.at(i, j, k) = cx < 0 ? kMTC : kLTC;
          }
        } else if (with_fc && k >= 4 && k <= 5) {
          if (std::abs(x) >= 12 && std::abs(x) <= 28 && y >= fc_y_lo && y <= fc_y_hi)
            m.at(i, j, k) = kFC;
        }
      }
  return m;
}

void check_partition(const LabelVolume& mask, const SubregionVolume& sub) {
  REQUIRE(sub.dims == mask.dims);
  for (Eigen::Index i = 0; i < mask.data.size(); ++i) {
    int label = mask.data[i];
    int code = sub.data[i];
    switch (label) {
      case kFC:
        CHECK((code >= 1 && code <= 10));
        break;
      case kMTC:
        CHECK((code >= 11 && code <= 15));
        break;
      case kLTC:
        CHECK((code >= 16 && code <= 20));
        break;
      default:
        CHECK(code == 0);  // background and PC stay unparcellated
    }
  }
}

}  // namespace

TEST_CASE("landmarks from two symmetric discs") {
  LabelVolume m = two_disc_scene();
  ParcellationLandmarks lm = compute_landmarks(m);
  CHECK(lm.ml_split_x == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(lm.mtc_centroid[0] == doctest::Approx(-20.0));
  CHECK(lm.ltc_centroid[0] == doctest::Approx(20.0));
  CHECK(lm.mtc_ap_extent[0] == doctest::Approx(-8.0));
  CHECK(lm.mtc_ap_extent[1] == doctest::Approx(8.0));
  // radius-8 disc, default shape factor 0.45 -> semi-axes 3.6
  CHECK(lm.mtc_ellipse_semi_axes[0] == doctest::Approx(0.45 * 8.0));
  CHECK(lm.mtc_ellipse_semi_axes[1] == doctest::Approx(0.45 * 8.0));
}

TEST_CASE("AP extent uses the voxel-centre convention") {
  LabelVolume m = make_grid(Vec3i(50, 40, 4), Vec3::Zero());
  // MTC occupying y indices 10..19, LTC far to the right
  for (int j = 10; j < 20; ++j)
    for (int i = 5; i < 15; ++i) m.at(i, j, 0) = kMTC;
  for (int j = 10; j < 20; ++j)
    for (int i = 35; i < 45; ++i) m.at(i, j, 0) = kLTC;
  m.at(25, 15, 2) = kFC;
  ParcellationLandmarks lm = compute_landmarks(m);
  CHECK(lm.mtc_ap_extent[0] == doctest::Approx(10.0));
  CHECK(lm.mtc_ap_extent[1] == doctest::Approx(19.0));
}

TEST_CASE("landmark failure modes") {
  SUBCASE("coincident tibial centroids") {
    LabelVolume m = make_grid(Vec3i(30, 30, 4), Vec3::Zero());
    for (int i = 5; i < 15; ++i) {
      m.at(i, 10, 0) = kMTC;
      m.at(i, 12, 0) = kLTC;  // same x centroid
    }
    m.at(10, 11, 2) = kFC;
    CHECK_THROWS_WITH_AS(compute_landmarks(m),
                         doctest::Contains("cannot separate medial/lateral"),
                         numeric_error);
  }
  SUBCASE("empty FC") {
    LabelVolume m = two_disc_scene(8.0, false);
    CHECK_THROWS_WITH_AS(compute_landmarks(m), doctest::Contains("empty compartment: FC"),
                         numeric_error);
  }
  SUBCASE("empty MTC in strict mode") {
    LabelVolume m = two_disc_scene();
    for (Eigen::Index i = 0; i < m.data.size(); ++i)
      if (m.data[i] == kMTC) m.data[i] = 0;
    CHECK_THROWS_WITH_AS(compute_landmarks(m),
                         doctest::Contains("empty compartment: MTC"), numeric_error);
  }
  SUBCASE("unstandardised mask rejected") {
    LabelVolume m = two_disc_scene();
    m.affine(0, 0) = -1.0;  // LPS-ish
    CHECK_THROWS_AS(compute_landmarks(m), numeric_error);
  }
}

TEST_CASE("femoral anterior/central/posterior split follows the tibial extent") {
  LabelVolume m = two_disc_scene();
  SubregionVolume sub = parcellate(m);
  check_partition(m, sub);
  for (int k = 4; k <= 5; ++k)
    for (int j = 0; j < m.dims[1]; ++j)
      for (int i = 0; i < m.dims[0]; ++i) {
        if (m.at(i, j, k) != kFC) continue;
        Vec3 w = voxel_world(m, i, j, k);
        int code = sub.at(i, j, k);
        bool medial = w[0] <= 0;
        int base = medial ? kAMFC : kALFC;
        if (w[1] > 8.0) {
          CHECK(code == base + 0);  // anterior
        } else if (w[1] < -8.0) {
          CHECK(code == base + 4);  // posterior
        } else {
          CHECK(code >= base + 1);
          CHECK(code <= base + 3);  // one of ec/cc/ic
        }
      }

  SUBCASE("central band splits into equal x-thirds, exterior farthest from split") {
    // Medial central band spans x in [-28, -12]; thirds at -22.67 and -17.33.
    for (int k = 4; k <= 5; ++k)
      for (int j = 0; j < m.dims[1]; ++j)
        for (int i = 0; i < m.dims[0]; ++i) {
          if (m.at(i, j, k) != kFC) continue;
          Vec3 w = voxel_world(m, i, j, k);
          if (w[0] > 0 || w[1] > 8.0 || w[1] < -8.0) continue;
          int code = sub.at(i, j, k);
          if (w[0] <= -28.0 + 16.0 / 3.0)
            CHECK(code == kEcMFC);
          else if (w[0] <= -28.0 + 32.0 / 3.0)
            CHECK(code == kCcMFC);
          else
            CHECK(code == kIcMFC);
        }
  }
}

TEST_CASE("all-posterior FC is allowed (peripheral bands may be empty)") {
  LabelVolume m = two_disc_scene(8.0, true, -15.0, -10.0);  // FC entirely below y_min
  SubregionVolume sub = parcellate(m);
  std::set<int> fc_codes;
  for (Eigen::Index i = 0; i < m.data.size(); ++i)
    if (m.data[i] == kFC) fc_codes.insert(sub.data[i]);
  CHECK(fc_codes == std::set<int>{kPMFC, kPLFC});
}

TEST_CASE("tibial quadrants and ellipse") {
  ParcellationConfig cfg;
  cfg.shape_factor = 0.5;  // semi-axes exactly (4, 4) on the radius-8 disc
  LabelVolume m = two_disc_scene();
  SubregionVolume sub = parcellate(m, cfg);
  check_partition(m, sub);

  auto code_at_world = [&](double x, double y) {
    Eigen::Vector4d idx = m.affine.inverse() * Eigen::Vector4d(x, y, 0, 1);
    return sub.at(int(std::lround(idx[0])), int(std::lround(idx[1])), 0);
  };
  CHECK(code_at_world(-20, 8) == kAMTC);   // straight anterior of centre
  CHECK(code_at_world(-20, -8) == kPMTC);  // straight posterior
  CHECK(code_at_world(-28, 0) == kEMTC);   // away from the split -> exterior
  CHECK(code_at_world(-12, 0) == kIMTC);   // toward the split -> interior
  CHECK(code_at_world(-20, 0) == kCMTC);   // centre
  CHECK(code_at_world(-16, 0) == kCMTC);   // exactly on the ellipse boundary
  CHECK(code_at_world(-15, 5) == kAMTC);   // 45-degree tie goes anterior
  CHECK(code_at_world(-15, -5) == kPMTC);  // and posterior
  // Lateral disc mirrors: exterior is now high x.
  CHECK(code_at_world(28, 0) == kELTC);
  CHECK(code_at_world(12, 0) == kILTC);

  SUBCASE("central ellipse area fraction is near 20% with default factor") {
    SubregionVolume sub45 = parcellate(m);
    double central = 0, total = 0;
    for (Eigen::Index i = 0; i < m.data.size(); ++i) {
      if (m.data[i] != kMTC) continue;
      total += 1;
      if (sub45.data[i] == kCMTC) central += 1;
    }
    CHECK(central / total == doctest::Approx(0.45 * 0.45).epsilon(0.25));
  }
}

TEST_CASE("partition property and determinism on the phantom") {
  PhantomSpec spec;
  spec.dims = Vec3i(80, 80, 30);
  spec.spacing = Vec3(1.2, 1.2, 2.0);
  PhantomCase pc = generate(spec);
  SubregionVolume sub = parcellate(pc.mask);
  check_partition(pc.mask, sub);

  SUBCASE("bit-deterministic across runs") {
    SubregionVolume again = parcellate(pc.mask);
    CHECK((again.data == sub.data).all());
  }
  SUBCASE("partition also holds on perturbed masks") {
    LabelVolume eroded = perturb_mask(pc.mask, MorphOp::erode, 1);
    check_partition(eroded, parcellate(eroded));
    LabelVolume dilated = perturb_mask(pc.mask, MorphOp::dilate, 1);
    check_partition(dilated, parcellate(dilated));
  }
  SUBCASE("translation invariance") {
    LabelVolume moved = pc.mask;
    moved.affine.topRightCorner<3, 1>() += Vec3(5, 7, -3);
    SubregionVolume sub2 = parcellate(moved);
    CHECK((sub2.data == sub.data).all());
  }
}

TEST_CASE("non-strict fallback handles a missing tibial side") {
  LabelVolume m = two_disc_scene();
  for (Eigen::Index i = 0; i < m.data.size(); ++i)
    if (m.data[i] == kLTC) m.data[i] = 0;  // drop the lateral disc
  ParcellationConfig cfg;
  cfg.strict = false;
  SubregionVolume sub = parcellate(m, cfg);
  check_partition(m, sub);
  // Lateral FC still gets labels via the percentile fallback.
  bool lateral_labels = false;
  for (Eigen::Index i = 0; i < m.data.size(); ++i)
    if (sub.data[i] >= kALFC && sub.data[i] <= kPLFC) lateral_labels = true;
  CHECK(lateral_labels);
}
