#include "t1rho/orientation.hpp"

#include <cmath>

namespace t1rho {

OrientationOps detect_orientation(const Mat4& affine) {
  Mat3 rot = affine.topLeftCorner<3, 3>();
  if (std::abs(rot.determinant()) < 1e-12)
    throw numeric_error("affine rotation block is singular");

  OrientationOps ops;
  std::array<int, 3> world_of_column;  // dominant world axis per array axis
  std::array<bool, 3> taken = {false, false, false};
  for (int col = 0; col < 3; ++col) {
    Vec3 dir = rot.col(col).normalized();
    int best = 0;
    double best_abs = -1.0;
    for (int row = 0; row < 3; ++row) {
      double a = std::abs(dir[row]);
      if (a > best_abs + 1e-12) {  // strict improvement; ties keep lower row
        best_abs = a;
        best = row;
      }
    }
    if (taken[best])
      throw numeric_error(
          "degenerate oblique affine: two array axes share dominant world axis " +
          std::to_string(best));
    taken[best] = true;
    world_of_column[col] = best;
    ops.flip[best] = dir[best] < 0;
    ops.source_axis[best] = col;
  }
  return ops;
}

}  // namespace t1rho
