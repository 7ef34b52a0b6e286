#include "t1rho/volume_ops.hpp"

namespace t1rho {

Volume resample(const Volume& moving, const Volume& target_grid,
                const RigidTransform& transform, Interpolation interpolation) {
  if (!transform.finite())
    throw numeric_error("rigid transform parameters must be finite");
  if (interpolation == Interpolation::nearest)
    return resample_nearest(moving, target_grid, transform);

  Mat4 map = detail::index_map(moving.affine, target_grid.affine, transform);
  Volume out = target_grid.grid_like();
  std::size_t n = 0;
  for (int k = 0; k < out.dims[2]; ++k)
    for (int j = 0; j < out.dims[1]; ++j)
      for (int i = 0; i < out.dims[0]; ++i) {
        Vec3 p = (map * Eigen::Vector4d(i, j, k, 1.0)).head<3>();
        out.data[n++] = detail::sample_trilinear(moving, p);
      }
  return out;
}

Volume mean_series(const DynamicSeries& series) {
  if (series.frames.empty()) throw numeric_error("cannot average an empty series");
  series.validate();
  Volume out = series.frames.front().second;
  for (std::size_t f = 1; f < series.frames.size(); ++f)
    out.data += series.frames[f].second.data;
  out.data /= static_cast<double>(series.frames.size());
  return out;
}

Vec3 world_from_voxel(const Volume& v, const Vec3i& index) {
  if (!v.contains(index[0], index[1], index[2]))
    throw numeric_error("voxel index out of range");
  return voxel_world(v, index[0], index[1], index[2]);
}

}  // namespace t1rho
