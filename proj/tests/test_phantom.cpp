#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "t1rho/fitting.hpp"
#include "t1rho/phantom.hpp"
#include "t1rho/volume_ops.hpp"

#include <filesystem>
#include <fstream>

using namespace t1rho;

namespace {

PhantomSpec small_spec() {
  PhantomSpec spec;
  spec.dims = Vec3i(72, 72, 32);
  spec.spacing = Vec3(1.4, 1.4, 2.0);
  return spec;
}

}  // namespace

TEST_CASE("noiseless intensities follow the forward model exactly") {
  PhantomCase pc = generate(small_spec());
  REQUIRE(pc.series.frames.size() == 4);
  // Scan order {0, 50, 30, 10} is preserved in the frame order.
  CHECK(pc.series.frames[0].first == 0.0);
  CHECK(pc.series.frames[1].first == 50.0);
  CHECK(pc.series.frames[2].first == 30.0);
  CHECK(pc.series.frames[3].first == 10.0);

  for (const auto& [tsl, frame] : pc.series.frames) {
    double expected = predict_signal(1000, 40, 0, tsl);
    for (Eigen::Index i = 0; i < pc.mask.data.size(); ++i) {
      if (pc.mask.data[i] != 0) {
        CHECK(frame.data[i] == doctest::Approx(expected).epsilon(1e-9));
      } else {
        CHECK(frame.data[i] == 0.0);
      }
    }
  }
}

TEST_CASE("all three compartments are populated") {
  PhantomCase pc = generate(small_spec());
  for (int label : {kFC, kMTC, kLTC}) CHECK((pc.mask.data == label).count() > 100);

  SUBCASE("truth covers all 20 subregions") {
    for (int code = 1; code <= kNumSubregions; ++code)
      CHECK((pc.truth.subregions.data == code).count() > 0);
  }
}

TEST_CASE("seeded noise is reproducible") {
  PhantomSpec spec = small_spec();
  spec.noise = NoiseModel::gaussian;
  spec.noise_sigma = 20.0;
  spec.seed = 42;
  PhantomCase a = generate(spec);
  PhantomCase b = generate(spec);
  for (std::size_t f = 0; f < a.series.frames.size(); ++f)
    CHECK((a.series.frames[f].second.data == b.series.frames[f].second.data).all());

  SUBCASE("different seeds differ") {
    spec.seed = 43;
    PhantomCase c = generate(spec);
    CHECK_FALSE((a.series.frames[0].second.data == c.series.frames[0].second.data).all());
  }
  SUBCASE("rician noise biases the background upward") {
    spec.noise = NoiseModel::rician;
    PhantomCase r = generate(spec);
    double bg_sum = 0;
    std::size_t bg_n = 0;
    for (Eigen::Index i = 0; i < r.mask.data.size(); ++i)
      if (r.mask.data[i] == 0) {
        bg_sum += r.series.frames[0].second.data[i];
        ++bg_n;
      }
    CHECK(bg_sum / double(bg_n) > 10.0);  // |N(0,sigma) + iN(0,sigma)| has mean ~sigma*1.25
  }
}

TEST_CASE("misalignment") {
  SUBCASE("identity misalignment keeps the canonical affine") {
    PhantomCase pc = generate(small_spec());
    CHECK((pc.series.frames[0].second.affine - pc.truth.subregions.affine)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  SUBCASE("misalignment physically moves the anatomy") {
    PhantomSpec spec = small_spec();
    spec.misalignment.translation_mm = Vec3(8, 0, 0);
    PhantomCase moved = generate(spec);
    PhantomCase ref = generate(small_spec());
    // Grid/affine unchanged, content shifted: mask centroids differ by ~8 mm in x.
    CHECK((moved.mask.affine - ref.mask.affine).cwiseAbs().maxCoeff() == 0.0);
    auto centroid_x = [](const PhantomCase& p) {
      double sum = 0;
      std::size_t n = 0;
      for (int k = 0; k < p.mask.dims[2]; ++k)
        for (int j = 0; j < p.mask.dims[1]; ++j)
          for (int i = 0; i < p.mask.dims[0]; ++i)
            if (p.mask.at(i, j, k) != 0) {
              sum += voxel_world(p.mask, i, j, k)[0];
              ++n;
            }
      return sum / double(n);
    };
    CHECK(centroid_x(moved) - centroid_x(ref) == doctest::Approx(8.0).epsilon(0.05));
  }
}

TEST_CASE("per-subregion true values drive the signal") {
  PhantomSpec spec = small_spec();
  std::array<double, kNumSubregions> truths{};
  for (int i = 0; i < kNumSubregions; ++i) truths[std::size_t(i)] = 30.0 + 2.0 * i;
  spec.t1rho_per_subregion = truths;
  PhantomCase pc = generate(spec);
  T1rhoMap map = fit_map(pc.series, pc.mask, {});
  std::vector<RegionStats> rows = region_stats(map, pc.truth.subregions);
  for (int code = 1; code <= kNumSubregions; ++code) {
    const RegionStats& r = rows[std::size_t(code - 1)];
    REQUIRE(r.n > 0);
    CHECK(std::abs(r.mean - truths[std::size_t(code - 1)]) < 0.05);
    CHECK(pc.truth.t1rho_ms[std::size_t(code - 1)] == truths[std::size_t(code - 1)]);
  }
}

TEST_CASE("spec validation") {
  PhantomSpec spec = small_spec();
  SUBCASE("bad radii") {
    spec.femoral_radius_inner = 40;  // inner >= outer
    CHECK_THROWS_AS(spec.validate(), config_error);
  }
  SUBCASE("negative sigma") {
    spec.noise_sigma = -1;
    CHECK_THROWS_AS(spec.validate(), config_error);
  }
  SUBCASE("geometry producing an empty compartment") {
    spec.dims = Vec3i(10, 10, 4);  // grid far smaller than the geometry
    spec.spacing = Vec3(0.5, 0.5, 0.5);
    CHECK_THROWS_WITH_AS(generate(spec), doctest::Contains("empty compartment"),
                         numeric_error);
  }
}

TEST_CASE("perturb_mask morphology") {
  LabelVolume cube;
  cube.dims = Vec3i(14, 14, 14);
  cube.spacing = Vec3::Ones();
  cube.affine = Mat4::Identity();
  cube.data = Eigen::ArrayXi::Zero(cube.dims.prod());
  for (int k = 2; k < 12; ++k)
    for (int j = 2; j < 12; ++j)
      for (int i = 2; i < 12; ++i) cube.at(i, j, k) = kMTC;

  SUBCASE("erode 1 turns a 10^3 cube into 8^3") {
    LabelVolume eroded = perturb_mask(cube, MorphOp::erode, 1);
    CHECK((eroded.data == kMTC).count() == 8 * 8 * 8);
    for (int k = 3; k < 11; ++k)
      for (int j = 3; j < 11; ++j)
        for (int i = 3; i < 11; ++i) CHECK(eroded.at(i, j, k) == kMTC);
  }
  SUBCASE("dilate then erode restores a convex solid") {
    LabelVolume closed =
        perturb_mask(perturb_mask(cube, MorphOp::dilate, 1), MorphOp::erode, 1);
    CHECK((closed.data == cube.data).all());
  }
  SUBCASE("erosion emptying a compartment is an error") {
    CHECK_THROWS_WITH_AS(perturb_mask(cube, MorphOp::erode, 5),
                         doctest::Contains("erosion emptied"), numeric_error);
  }
  SUBCASE("dilation never overwrites another compartment") {
    LabelVolume two = cube;
    for (int k = 2; k < 12; ++k)
      for (int j = 2; j < 12; ++j) two.at(12, j, k) = kLTC;  // slab touching the cube
    LabelVolume dil = perturb_mask(two, MorphOp::dilate, 1);
    for (Eigen::Index i = 0; i < two.data.size(); ++i)
      if (two.data[i] != 0) CHECK(dil.data[i] == two.data[i]);
  }
}

TEST_CASE("spec loads from JSON") {
  namespace fs = std::filesystem;
  fs::path p = fs::temp_directory_path() / "t1rho_phantom_spec.json";
  {
    std::ofstream f(p);
    f << R"({"dims": [64, 64, 30], "spacing": [1.5, 1.5, 2.0], "noise": "gaussian",
             "noise_sigma": 12.5, "seed": 9,
             "misalignment": {"rotations_deg": [0, 0, 10], "translation_mm": [1, 2, 3]}})";
  }
  PhantomSpec spec = phantom_spec_from_json_file(p.string());
  CHECK(spec.dims == Vec3i(64, 64, 30));
  CHECK(spec.noise == NoiseModel::gaussian);
  CHECK(spec.noise_sigma == 12.5);
  CHECK(spec.seed == 9);
  CHECK(spec.misalignment.rotations_deg[2] == 10.0);
  CHECK(spec.misalignment.translation_mm[1] == 2.0);
}
