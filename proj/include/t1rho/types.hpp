#pragma once

#include <Eigen/Dense>

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace t1rho {

// Error taxonomy mapped to CLI exit codes (config=2, io=3, numeric=4).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Vec3 = Eigen::Vector3d;
using Vec3i = Eigen::Vector3i;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Dense 3-D scalar grid with voxel spacing and a voxel-to-world affine.
/// Data is row-major with x fastest: linear index = i + dims[0]*(j + dims[1]*k).
template <typename Scalar>
struct VolumeT {
  Vec3i dims = Vec3i::Zero();
  Vec3 spacing = Vec3::Ones();
  Mat4 affine = Mat4::Identity();
  Eigen::Array<Scalar, Eigen::Dynamic, 1> data;

  VolumeT() = default;
  VolumeT(Vec3i dims_, Vec3 spacing_, Mat4 affine_,
          Eigen::Array<Scalar, Eigen::Dynamic, 1> data_)
      : dims(std::move(dims_)),
        spacing(std::move(spacing_)),
        affine(std::move(affine_)),
        data(std::move(data_)) {
    validate();
  }

  std::size_t size() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(j) +
                static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k));
  }

  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }

  Scalar at(int i, int j, int k) const { return data[index(i, j, k)]; }
  Scalar& at(int i, int j, int k) { return data[index(i, j, k)]; }

  void validate() const {
    if ((dims.array() <= 0).any())
      throw numeric_error("volume dims must be positive");
    if ((spacing.array() <= 0).any())
      throw numeric_error("voxel spacing must be positive");
    if (static_cast<std::size_t>(data.size()) != size())
      throw numeric_error("data length does not match dims");
    Mat3 rot = affine.topLeftCorner<3, 3>();
    if (std::abs(rot.determinant()) < 1e-12)
      throw numeric_error("affine rotation block is singular");
    for (int c = 0; c < 3; ++c) {
      double n = rot.col(c).norm();
      if (std::abs(n - spacing[c]) > 1e-6 * std::max(1.0, spacing[c]))
        throw numeric_error("affine column norm disagrees with spacing");
    }
  }

  /// Grid-only copy with zeroed data, used as a resampling target.
  VolumeT grid_like() const {
    VolumeT out;
    out.dims = dims;
    out.spacing = spacing;
    out.affine = affine;
    out.data = Eigen::Array<Scalar, Eigen::Dynamic, 1>::Zero(data.size());
    return out;
  }

  bool same_grid(const VolumeT& o, double affine_tol = 0.0) const {
    return dims == o.dims && spacing.isApprox(o.spacing, 1e-12) &&
           (affine - o.affine).cwiseAbs().maxCoeff() <= affine_tol;
  }
};

using Volume = VolumeT<double>;
using LabelVolume = VolumeT<int>;
using SubregionVolume = VolumeT<int>;

// Cartilage compartment codes (label codebook for input masks).
enum CompartmentLabel : int { kBackground = 0, kFC = 1, kMTC = 2, kLTC = 3, kPC = 4 };

inline const std::map<int, std::string>& compartment_names() {
  static const std::map<int, std::string> names = {
      {0, "background"}, {1, "FC"}, {2, "MTC"}, {3, "LTC"}, {4, "PC"}};
  return names;
}

/// Ordered spin-lock series sharing one grid.
struct DynamicSeries {
  std::vector<std::pair<double, Volume>> frames;  // (tsl ms, volume)
  std::vector<int> acquisition_order;             // permutation recording scan order

  void validate() const {
    if (frames.size() < 2) throw numeric_error("dynamic series needs at least 2 frames");
    const Volume& first = frames.front().second;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const auto& [tsl, vol] = frames[i];
      if (tsl < 0) throw numeric_error("tsl values must be >= 0");
      if (!vol.same_grid(first)) throw numeric_error("series frames must share one grid");
      for (std::size_t j = i + 1; j < frames.size(); ++j)
        if (frames[j].first == tsl) throw numeric_error("tsl values must be distinct");
    }
  }
};

/// Rigid transform: rotations in degrees about world x/y/z (applied z*y*x),
/// then translation in mm. Maps moving-world to target-world coordinates.
struct RigidTransform {
  Vec3 rotations_deg = Vec3::Zero();
  Vec3 translation_mm = Vec3::Zero();

  Mat4 matrix() const;
  RigidTransform inverse() const;
  bool finite() const {
    return rotations_deg.allFinite() && translation_mm.allFinite();
  }
};

Mat3 rotation_zyx(const Vec3& rotations_deg);

}  // namespace t1rho
