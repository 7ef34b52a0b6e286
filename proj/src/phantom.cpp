#include "t1rho/phantom.hpp"

#include "t1rho/fitting.hpp"
#include "t1rho/volume_ops.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

namespace t1rho {

void PhantomSpec::validate() const {
  if ((dims.array() <= 0).any()) throw config_error("phantom dims must be positive");
  if ((spacing.array() <= 0).any())
    throw config_error("phantom spacing must be positive");
  if (tsl_scan_order.size() < 2) throw config_error("phantom needs >= 2 tsl values");
  if (femoral_radius_inner <= 0 || femoral_radius_outer <= femoral_radius_inner)
    throw config_error("femoral shell radii must satisfy 0 < inner < outer");
  if (tibial_radius <= 0 || tibial_half_thickness <= 0 || tibial_offset_x <= 0)
    throw config_error("tibial disc geometry must be positive");
  if (noise_sigma < 0) throw config_error("noise sigma must be >= 0");
  double lo = 1e9, hi = -1e9;
  if (t1rho_per_subregion) {
    for (double v : *t1rho_per_subregion) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  } else {
    lo = hi = t1rho_global;
  }
  if (lo <= 0) throw config_error("true t1rho values must be positive");
}

namespace {

Mat4 canonical_affine(const Vec3i& dims, const Vec3& spacing) {
  Mat4 a = Mat4::Identity();
  a.topLeftCorner<3, 3>() = spacing.asDiagonal();
  for (int i = 0; i < 3; ++i) a(i, 3) = -0.5 * (dims[i] - 1) * spacing[i];
  return a;
}

int label_at(const PhantomSpec& s, const Vec3& o) {
  // Femoral dome shell.
  Vec3 rel = o - s.femoral_centre;
  double r = rel.norm();
  if (r >= s.femoral_radius_inner && r <= s.femoral_radius_outer) {
    double polar = std::acos(std::clamp(rel[2] / std::max(r, 1e-12), -1.0, 1.0));
    if (polar <= s.femoral_max_polar_deg * M_PI / 180.0) return kFC;
  }
  // Tibial discs; medial on the low-x side.
  double zc = s.tibial_top_z - s.tibial_half_thickness;
  if (std::abs(o[2] - zc) <= s.tibial_half_thickness) {
    double dym = o[1];
    double dxm = o[0] + s.tibial_offset_x;
    if (dxm * dxm + dym * dym <= s.tibial_radius * s.tibial_radius) return kMTC;
    double dxl = o[0] - s.tibial_offset_x;
    if (dxl * dxl + dym * dym <= s.tibial_radius * s.tibial_radius) return kLTC;
  }
  return kBackground;
}

}  // namespace

PhantomCase generate(const PhantomSpec& spec) {
  spec.validate();
  Mat4 affine = canonical_affine(spec.dims, spec.spacing);
  const std::size_t n =
      static_cast<std::size_t>(spec.dims[0]) * spec.dims[1] * spec.dims[2];

  PhantomCase out;

  // Canonical (unmisaligned) geometry defines the ground truth.
  LabelVolume canonical_mask;
  canonical_mask.dims = spec.dims;
  canonical_mask.spacing = spec.spacing;
  canonical_mask.affine = affine;
  canonical_mask.data = Eigen::ArrayXi::Zero(static_cast<Eigen::Index>(n));
  {
    std::size_t idx = 0;
    for (int k = 0; k < spec.dims[2]; ++k)
      for (int j = 0; j < spec.dims[1]; ++j)
        for (int i = 0; i < spec.dims[0]; ++i, ++idx) {
          Vec3 w = (affine * Eigen::Vector4d(i, j, k, 1.0)).head<3>();
          canonical_mask.data[static_cast<Eigen::Index>(idx)] = label_at(spec, w);
        }
  }
  for (int label : {kFC, kMTC, kLTC})
    if ((canonical_mask.data == label).count() == 0)
      throw numeric_error("phantom geometry produced an empty compartment: " +
                          compartment_names().at(label));

  out.truth.subregions = parcellate(canonical_mask);
  for (int code = 1; code <= kNumSubregions; ++code)
    out.truth.t1rho_ms[static_cast<std::size_t>(code - 1)] =
        spec.t1rho_per_subregion ? (*spec.t1rho_per_subregion)[static_cast<std::size_t>(code - 1)]
                                 : spec.t1rho_global;

  const bool misaligned = !spec.misalignment.rotations_deg.isZero() ||
                          !spec.misalignment.translation_mm.isZero();
  Mat4 to_object = Mat4::Identity();
  if (misaligned) to_object = spec.misalignment.inverse().matrix();
  Mat4 object_index_from_world = affine.inverse();

  // Subregion code driving the per-voxel true t1rho, looked up in object space.
  // Points analytically inside the anatomy can round to just outside the
  // rasterised canonical mask, so take the nearest labelled canonical voxel.
  auto subregion_at = [&](const Vec3& object_point) -> int {
    Vec3 idx = (object_index_from_world * Eigen::Vector4d(object_point[0],
                                                          object_point[1],
                                                          object_point[2], 1.0))
                   .head<3>();
    int ic = static_cast<int>(std::lround(idx[0]));
    int jc = static_cast<int>(std::lround(idx[1]));
    int kc = static_cast<int>(std::lround(idx[2]));
    for (int radius : {0, 1, 2}) {
      int best = 0;
      double best_d2 = std::numeric_limits<double>::infinity();
      for (int dk = -radius; dk <= radius; ++dk)
        for (int dj = -radius; dj <= radius; ++dj)
          for (int di = -radius; di <= radius; ++di) {
            int i = ic + di, j = jc + dj, k = kc + dk;
            if (!out.truth.subregions.contains(i, j, k)) continue;
            int code = out.truth.subregions.at(i, j, k);
            if (code < 1) continue;
            Vec3 d((i - idx[0]) * spec.spacing[0], (j - idx[1]) * spec.spacing[1],
                   (k - idx[2]) * spec.spacing[2]);
            double d2 = d.squaredNorm();
            if (d2 < best_d2) {
              best_d2 = d2;
              best = code;
            }
          }
      if (best >= 1) return best;
    }
    return 0;
  };

  out.mask.dims = spec.dims;
  out.mask.spacing = spec.spacing;
  out.mask.affine = affine;
  out.mask.data = Eigen::ArrayXi::Zero(static_cast<Eigen::Index>(n));

  Eigen::ArrayXd true_t1rho = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(n));
  {
    std::size_t idx = 0;
    for (int k = 0; k < spec.dims[2]; ++k)
      for (int j = 0; j < spec.dims[1]; ++j)
        for (int i = 0; i < spec.dims[0]; ++i, ++idx) {
          Vec3 w = (affine * Eigen::Vector4d(i, j, k, 1.0)).head<3>();
          Vec3 o = misaligned ? Vec3((to_object * Eigen::Vector4d(w[0], w[1], w[2], 1.0))
                                         .head<3>())
                              : w;
          int label = label_at(spec, o);
          out.mask.data[static_cast<Eigen::Index>(idx)] = label;
          if (label == kFC || label == kMTC || label == kLTC) {
            int code = subregion_at(o);
            true_t1rho[static_cast<Eigen::Index>(idx)] =
                code >= 1 ? out.truth.t1rho_ms[static_cast<std::size_t>(code - 1)]
                          : (spec.t1rho_per_subregion ? spec.t1rho_global
                                                      : spec.t1rho_global);
          }
        }
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  out.series.acquisition_order.resize(spec.tsl_scan_order.size());
  for (std::size_t f = 0; f < spec.tsl_scan_order.size(); ++f)
    out.series.acquisition_order[f] = static_cast<int>(f);

  for (double tsl : spec.tsl_scan_order) {
    Volume frame;
    frame.dims = spec.dims;
    frame.spacing = spec.spacing;
    frame.affine = affine;
    frame.data = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t idx = 0; idx < n; ++idx) {
      double t = true_t1rho[static_cast<Eigen::Index>(idx)];
      double signal = t > 0 ? predict_signal(spec.i0, t, spec.c, tsl) : 0.0;
      switch (spec.noise) {
        case NoiseModel::none:
          break;
        case NoiseModel::gaussian:
          signal += spec.noise_sigma * gauss(rng);
          break;
        case NoiseModel::rician: {
          double re = signal + spec.noise_sigma * gauss(rng);
          double im = spec.noise_sigma * gauss(rng);
          signal = std::hypot(re, im);
          break;
        }
      }
      frame.data[static_cast<Eigen::Index>(idx)] = signal;
    }
    out.series.frames.emplace_back(tsl, std::move(frame));
  }
  return out;
}

LabelVolume perturb_mask(const LabelVolume& mask, MorphOp op, int radius_voxels) {
  if (radius_voxels < 1) throw config_error("morphology radius must be >= 1");
  static const int nb[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                               {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  LabelVolume cur = mask;
  for (int pass = 0; pass < radius_voxels; ++pass) {
    LabelVolume next = cur;
    for (int k = 0; k < cur.dims[2]; ++k)
      for (int j = 0; j < cur.dims[1]; ++j)
        for (int i = 0; i < cur.dims[0]; ++i) {
          int label = cur.at(i, j, k);
          if (op == MorphOp::erode) {
            if (label == 0) continue;
            for (const auto& d : nb) {
              int ni = i + d[0], nj = j + d[1], nk = k + d[2];
              if (!cur.contains(ni, nj, nk) || cur.at(ni, nj, nk) != label) {
                next.at(i, j, k) = 0;
                break;
              }
            }
          } else {
            if (label != 0) continue;
            int best = 0;
            for (const auto& d : nb) {
              int ni = i + d[0], nj = j + d[1], nk = k + d[2];
              if (!cur.contains(ni, nj, nk)) continue;
              int nl = cur.at(ni, nj, nk);
              if (nl > 0 && (best == 0 || nl < best)) best = nl;  // lower label wins
            }
            if (best > 0) next.at(i, j, k) = best;
          }
        }
    cur = std::move(next);
  }
  if (op == MorphOp::erode) {
    for (int label = 1; label <= 4; ++label) {
      bool had = (mask.data == label).count() > 0;
      bool has = (cur.data == label).count() > 0;
      if (had && !has)
        throw numeric_error("erosion emptied compartment " +
                            compartment_names().at(label));
    }
  }
  return cur;
}

PhantomSpec phantom_spec_from_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open phantom spec: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw config_error(std::string("invalid phantom spec JSON: ") + e.what());
  }
  PhantomSpec s;
  try {
    if (j.contains("dims")) {
      auto d = j["dims"].get<std::vector<int>>();
      if (d.size() != 3) throw config_error("dims must have 3 entries");
      s.dims = Vec3i(d[0], d[1], d[2]);
    }
    if (j.contains("spacing")) {
      auto d = j["spacing"].get<std::vector<double>>();
      if (d.size() != 3) throw config_error("spacing must have 3 entries");
      s.spacing = Vec3(d[0], d[1], d[2]);
    }
    if (j.contains("tsl")) s.tsl_scan_order = j["tsl"].get<std::vector<double>>();
    if (j.contains("femoral_radius_inner"))
      s.femoral_radius_inner = j["femoral_radius_inner"].get<double>();
    if (j.contains("femoral_radius_outer"))
      s.femoral_radius_outer = j["femoral_radius_outer"].get<double>();
    if (j.contains("femoral_max_polar_deg"))
      s.femoral_max_polar_deg = j["femoral_max_polar_deg"].get<double>();
    if (j.contains("tibial_radius")) s.tibial_radius = j["tibial_radius"].get<double>();
    if (j.contains("tibial_half_thickness"))
      s.tibial_half_thickness = j["tibial_half_thickness"].get<double>();
    if (j.contains("tibial_offset_x"))
      s.tibial_offset_x = j["tibial_offset_x"].get<double>();
    if (j.contains("tibial_top_z")) s.tibial_top_z = j["tibial_top_z"].get<double>();
    if (j.contains("t1rho_global")) s.t1rho_global = j["t1rho_global"].get<double>();
    if (j.contains("t1rho_per_subregion")) {
      auto v = j["t1rho_per_subregion"].get<std::vector<double>>();
      if (v.size() != kNumSubregions)
        throw config_error("t1rho_per_subregion must have 20 entries");
      std::array<double, kNumSubregions> arr{};
      std::copy(v.begin(), v.end(), arr.begin());
      s.t1rho_per_subregion = arr;
    }
    if (j.contains("i0")) s.i0 = j["i0"].get<double>();
    if (j.contains("c")) s.c = j["c"].get<double>();
    if (j.contains("noise")) {
      std::string m = j["noise"].get<std::string>();
      if (m == "none")
        s.noise = NoiseModel::none;
      else if (m == "gaussian")
        s.noise = NoiseModel::gaussian;
      else if (m == "rician")
        s.noise = NoiseModel::rician;
      else
        throw config_error("unknown noise model: " + m);
    }
    if (j.contains("noise_sigma")) s.noise_sigma = j["noise_sigma"].get<double>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("misalignment")) {
      auto& m = j["misalignment"];
      if (m.contains("rotations_deg")) {
        auto r = m["rotations_deg"].get<std::vector<double>>();
        if (r.size() != 3) throw config_error("rotations_deg must have 3 entries");
        s.misalignment.rotations_deg = Vec3(r[0], r[1], r[2]);
      }
      if (m.contains("translation_mm")) {
        auto t = m["translation_mm"].get<std::vector<double>>();
        if (t.size() != 3) throw config_error("translation_mm must have 3 entries");
        s.misalignment.translation_mm = Vec3(t[0], t[1], t[2]);
      }
    }
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw config_error(std::string("invalid phantom spec: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace t1rho
