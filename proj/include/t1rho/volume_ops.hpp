#pragma once

#include "t1rho/types.hpp"

#include <cmath>

namespace t1rho {

enum class Interpolation { trilinear, nearest };

namespace detail {

/// Combined mapping from target voxel index to moving voxel index:
/// A_moving^-1 * T^-1 * A_target.
inline Mat4 index_map(const Mat4& moving_affine, const Mat4& target_affine,
                      const RigidTransform& transform) {
  Mat4 t = transform.matrix();
  Mat4 t_inv = Mat4::Identity();
  Mat3 rt = t.topLeftCorner<3, 3>().transpose();
  t_inv.topLeftCorner<3, 3>() = rt;
  t_inv.topRightCorner<3, 1>() = -(rt * t.topRightCorner<3, 1>());
  return moving_affine.inverse() * t_inv * target_affine;
}

template <typename Scalar>
Scalar sample_nearest(const VolumeT<Scalar>& v, const Vec3& p) {
  int i = static_cast<int>(std::lround(p[0]));
  int j = static_cast<int>(std::lround(p[1]));
  int k = static_cast<int>(std::lround(p[2]));
  if (!v.contains(i, j, k)) return Scalar(0);
  return v.at(i, j, k);
}

inline double sample_trilinear(const Volume& v, const Vec3& p) {
  int i0 = static_cast<int>(std::floor(p[0]));
  int j0 = static_cast<int>(std::floor(p[1]));
  int k0 = static_cast<int>(std::floor(p[2]));
  double fx = p[0] - i0, fy = p[1] - j0, fz = p[2] - k0;
  double acc = 0.0;
  for (int dk = 0; dk < 2; ++dk)
    for (int dj = 0; dj < 2; ++dj)
      for (int di = 0; di < 2; ++di) {
        int i = i0 + di, j = j0 + dj, k = k0 + dk;
        double w = (di ? fx : 1 - fx) * (dj ? fy : 1 - fy) * (dk ? fz : 1 - fz);
        if (w == 0.0) continue;
        acc += w * (v.contains(i, j, k) ? v.at(i, j, k) : 0.0);
      }
  return acc;
}

}  // namespace detail

/// Resamples `moving` onto the grid of `target_grid` through a rigid transform
/// mapping moving-world to target-world. Out-of-field voxels are 0.
Volume resample(const Volume& moving, const Volume& target_grid,
                const RigidTransform& transform, Interpolation interpolation);

/// Label volumes resample with nearest-neighbour only.
template <typename Scalar>
VolumeT<Scalar> resample_nearest(const VolumeT<Scalar>& moving,
                                 const Volume& target_grid,
                                 const RigidTransform& transform) {
  if (!transform.finite())
    throw numeric_error("rigid transform parameters must be finite");
  Mat4 map = detail::index_map(moving.affine, target_grid.affine, transform);
  VolumeT<Scalar> out;
  out.dims = target_grid.dims;
  out.spacing = target_grid.spacing;
  out.affine = target_grid.affine;
  out.data.resize(static_cast<Eigen::Index>(target_grid.size()));
  std::size_t n = 0;
  for (int k = 0; k < out.dims[2]; ++k)
    for (int j = 0; j < out.dims[1]; ++j)
      for (int i = 0; i < out.dims[0]; ++i) {
        Vec3 p = (map * Eigen::Vector4d(i, j, k, 1.0)).template head<3>();
        out.data[n++] = detail::sample_nearest(moving, p);
      }
  return out;
}

/// Voxelwise arithmetic mean of all frames; grid unchanged.
Volume mean_series(const DynamicSeries& series);

/// World coordinates (mm) of a voxel centre.
Vec3 world_from_voxel(const Volume& v, const Vec3i& index);

template <typename Scalar>
Vec3 voxel_world(const VolumeT<Scalar>& v, int i, int j, int k) {
  Eigen::Vector4d w = v.affine * Eigen::Vector4d(i, j, k, 1.0);
  return w.head<3>();
}

}  // namespace t1rho
