#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "t1rho/fitting.hpp"
#include "t1rho/phantom.hpp"

#include <random>
#include <vector>

using namespace t1rho;

TEST_CASE("predict_signal") {
  CHECK(predict_signal(1000, 40, 0, 0) == doctest::Approx(1000.0));
  CHECK(predict_signal(1000, 40, 0, 10) == doctest::Approx(778.8008).epsilon(1e-6));
  CHECK(predict_signal(1000, 40, 0, 30) == doctest::Approx(472.3666).epsilon(1e-6));
  CHECK(predict_signal(1000, 40, 0, 50) == doctest::Approx(286.5048).epsilon(1e-6));
  CHECK(predict_signal(100, 40, 7, 0) == doctest::Approx(107.0));
  CHECK_THROWS_AS(predict_signal(1000, 0, 0, 10), numeric_error);
  CHECK_THROWS_AS(predict_signal(1000, -5, 0, 10), numeric_error);
}

TEST_CASE("fit_voxel recovers noiseless parameters") {
  std::vector<double> tsl = {0, 10, 30, 50};

  SUBCASE("four-point two-parameter fit") {
    std::vector<double> y;
    for (double t : tsl) y.push_back(predict_signal(1000, 40, 0, t));
    FitResult r = fit_voxel(y, tsl, {});
    CHECK(r.converged);
    CHECK_FALSE(r.clamped);
    CHECK(r.t1rho == doctest::Approx(40.0).epsilon(0.05 / 40.0));
    CHECK(r.i0 == doctest::Approx(1000.0).epsilon(1e-3));
    CHECK(r.c == 0.0);
  }
  SUBCASE("two-point closed form: t1rho = -50/ln(0.36788)") {
    std::vector<double> y2 = {1000.0, 367.88};
    std::vector<double> t2 = {0.0, 50.0};
    FitResult r = fit_voxel(y2, t2, {});
    CHECK(r.t1rho == doctest::Approx(50.0).epsilon(0.05 / 50.0));
  }
  SUBCASE("three-parameter model recovers a nonzero offset") {
    std::vector<double> y;
    for (double t : tsl) y.push_back(predict_signal(900, 35, 50, t));
    FitConfig cfg;
    cfg.model = FitModel::three_param;
    FitResult r = fit_voxel(y, tsl, cfg);
    CHECK(r.t1rho == doctest::Approx(35.0).epsilon(0.05 / 35.0));
    CHECK(r.c == doctest::Approx(50.0).epsilon(0.01));
  }
}

TEST_CASE("fit_voxel edge cases") {
  std::vector<double> tsl = {0, 10, 30, 50};

  SUBCASE("constant positive signal clamps at t1rho_max") {
    std::vector<double> y = {500, 500, 500, 500};
    FitResult r = fit_voxel(y, tsl, {});
    CHECK(r.clamped);
    CHECK(r.t1rho == doctest::Approx(300.0).epsilon(0.01));
  }
  SUBCASE("signal below floor is rejected") {
    FitConfig cfg;
    cfg.intensity_floor = 10.0;
    std::vector<double> y = {5, 4, 3, 2};
    CHECK_THROWS_WITH_AS(fit_voxel(y, tsl, cfg), doctest::Contains("signal below floor"),
                         numeric_error);
  }
  SUBCASE("fewer samples than parameters") {
    std::vector<double> y = {1000.0};
    std::vector<double> t = {0.0};
    CHECK_THROWS_AS(fit_voxel(y, t, {}), numeric_error);
    FitConfig three;
    three.model = FitModel::three_param;
    std::vector<double> y2 = {1000, 700};
    std::vector<double> t2 = {0, 20};
    CHECK_THROWS_AS(fit_voxel(y2, t2, three), numeric_error);
  }
  SUBCASE("duplicate tsl rejected") {
    std::vector<double> y = {1000, 700, 500, 300};
    std::vector<double> t = {0, 10, 10, 50};
    CHECK_THROWS_AS(fit_voxel(y, t, {}), numeric_error);
  }
}

TEST_CASE("fit invariances") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 20.0);
  std::vector<double> tsl = {0, 10, 30, 50};
  std::vector<double> y;
  for (double t : tsl) y.push_back(predict_signal(1000, 45, 0, t) + noise(rng));
  FitResult base = fit_voxel(y, tsl, {});

  SUBCASE("scale equivariance") {
    std::vector<double> y3 = y;
    for (double& v : y3) v *= 3.0;
    FitResult r = fit_voxel(y3, tsl, {});
    CHECK(r.t1rho == doctest::Approx(base.t1rho).epsilon(0.02 / base.t1rho));
    CHECK(r.i0 == doctest::Approx(3.0 * base.i0).epsilon(1e-6));
  }
  SUBCASE("tsl-order invariance") {
    std::vector<double> yp = {y[3], y[0], y[2], y[1]};
    std::vector<double> tp = {tsl[3], tsl[0], tsl[2], tsl[1]};
    FitResult r = fit_voxel(yp, tp, {});
    CHECK(r.t1rho == doctest::Approx(base.t1rho).epsilon(1e-9));
    CHECK(r.rss == doctest::Approx(base.rss).epsilon(1e-9));
  }
  SUBCASE("residual local optimality") {
    auto rss_at = [&](double t1rho) {
      // Closed-form i0 for fixed t1rho.
      double sxy = 0, sxx = 0;
      for (std::size_t i = 0; i < tsl.size(); ++i) {
        double b = std::exp(-tsl[i] / t1rho);
        sxy += b * y[i];
        sxx += b * b;
      }
      double i0 = sxy / sxx;
      double rss = 0;
      for (std::size_t i = 0; i < tsl.size(); ++i) {
        double r = y[i] - i0 * std::exp(-tsl[i] / t1rho);
        rss += r * r;
      }
      return rss;
    };
    CHECK(base.rss <= rss_at(base.t1rho + 0.02) + 1e-9);
    CHECK(base.rss <= rss_at(base.t1rho - 0.02) + 1e-9);
  }
  SUBCASE("monotonic in the two-point intensity ratio") {
    double prev = 0.0;
    for (double ratio : {0.2, 0.3, 0.4, 0.5, 0.6}) {
      std::vector<double> y2 = {1000.0, 1000.0 * ratio};
      std::vector<double> t2 = {0.0, 40.0};
      FitResult r = fit_voxel(y2, t2, {});
      CHECK(r.t1rho > prev);
      prev = r.t1rho;
    }
  }
}

TEST_CASE("dichotomy fitter agrees with the dense grid-search oracle") {
  std::mt19937_64 rng(20240501);
  std::uniform_real_distribution<double> t1rho_dist(10.0, 120.0);
  std::normal_distribution<double> noise(0.0, 20.0);  // 2% of i0
  std::vector<double> tsl = {0, 10, 30, 50};
  for (int trial = 0; trial < 100; ++trial) {
    double truth = t1rho_dist(rng);
    std::vector<double> y;
    for (double t : tsl) y.push_back(predict_signal(1000, truth, 0, t) + noise(rng));
    FitResult fast = fit_voxel(y, tsl, {});
    FitResult slow = fit_voxel_grid_search(y, tsl, {}, 0.005);
    CHECK(std::abs(fast.t1rho - slow.t1rho) <= 0.1);
  }
}

TEST_CASE("fit_map") {
  PhantomSpec spec;
  spec.dims = Vec3i(64, 64, 24);
  spec.spacing = Vec3(1.5, 1.5, 2.5);
  PhantomCase pc = generate(spec);

  SUBCASE("noiseless phantom fits to truth everywhere in the mask") {
    T1rhoMap map = fit_map(pc.series, pc.mask, {});
    std::size_t fitted = 0;
    for (Eigen::Index i = 0; i < pc.mask.data.size(); ++i) {
      if (pc.mask.data[i] == 0) {
        CHECK(map.t1rho.data[i] == 0.0);
        CHECK(map.flags.data[i] == kOutsideRegion);
      } else {
        ++fitted;
        CHECK(map.flags.data[i] == kFitted);
        CHECK(std::abs(map.t1rho.data[i] - 40.0) < 0.05);
      }
    }
    CHECK(fitted > 1000);
  }
  SUBCASE("region mean within 2% under 2% gaussian noise") {
    PhantomSpec noisy = spec;
    noisy.noise = NoiseModel::gaussian;
    noisy.noise_sigma = 20.0;
    noisy.seed = 99;
    PhantomCase npc = generate(noisy);
    T1rhoMap map = fit_map(npc.series, npc.mask, {});
    double sum = 0;
    std::size_t n = 0;
    for (Eigen::Index i = 0; i < npc.mask.data.size(); ++i)
      if (npc.mask.data[i] != 0 && map.flags.data[i] == kFitted) {
        sum += map.t1rho.data[i];
        ++n;
      }
    REQUIRE(n >= 1000);
    CHECK(sum / double(n) == doctest::Approx(40.0).epsilon(0.02));
  }
  SUBCASE("empty region yields an all-zero map") {
    LabelVolume empty = pc.mask;
    empty.data.setZero();
    T1rhoMap map = fit_map(pc.series, empty, {});
    CHECK(map.t1rho.data.abs().maxCoeff() == 0.0);
    CHECK(map.flags.data.maxCoeff() == kOutsideRegion);
  }
}

TEST_CASE("region_stats") {
  // Hand-built map: one subregion with values {30, 50}, one uniform at 40.
  Volume grid;
  grid.dims = Vec3i(10, 1, 1);
  grid.spacing = Vec3::Ones();
  grid.affine = Mat4::Identity();
  grid.data = Eigen::ArrayXd::Zero(10);
  T1rhoMap map;
  map.t1rho = grid;
  map.i0 = grid;
  map.rss = grid;
  map.flags.dims = grid.dims;
  map.flags.spacing = grid.spacing;
  map.flags.affine = grid.affine;
  map.flags.data = Eigen::ArrayXi::Zero(10);
  SubregionVolume sub = map.flags;

  // aMFC: {30, 50}; aMTC: 4 voxels of 40; one clamped voxel in aMFC.
  map.t1rho.data[0] = 30;
  map.t1rho.data[1] = 50;
  map.t1rho.data[2] = 300;
  sub.data[0] = kAMFC;
  sub.data[1] = kAMFC;
  sub.data[2] = kAMFC;
  map.flags.data[0] = kFitted;
  map.flags.data[1] = kFitted;
  map.flags.data[2] = kClamped;
  for (int i = 3; i < 7; ++i) {
    map.t1rho.data[i] = 40;
    sub.data[i] = kAMTC;
    map.flags.data[i] = kFitted;
  }

  std::vector<RegionStats> rows = region_stats(map, sub);
  REQUIRE(rows.size() == 23);  // 20 subregions + FC/MTC/LTC

  const RegionStats& amfc = rows[kAMFC - 1];
  CHECK(amfc.region_name == "aMFC");
  CHECK(amfc.n == 2);
  CHECK(amfc.excluded_n == 1);
  CHECK(amfc.mean == doctest::Approx(40.0));
  CHECK(amfc.sd == doctest::Approx(14.142).epsilon(1e-4));
  CHECK(amfc.min == 30.0);
  CHECK(amfc.max == 50.0);

  const RegionStats& amtc = rows[kAMTC - 1];
  CHECK(amtc.n == 4);
  CHECK(amtc.mean == doctest::Approx(40.0));
  CHECK(amtc.sd == 0.0);

  // Whole-compartment rows aggregate their subregions.
  CHECK(rows[kFCRow - 1].region_name == "FC");
  CHECK(rows[kFCRow - 1].n == 2);
  CHECK(rows[kFCRow - 1].excluded_n == 1);
  CHECK(rows[kMTCRow - 1].n == 4);
  CHECK(rows[kLTCRow - 1].n == 0);
}
