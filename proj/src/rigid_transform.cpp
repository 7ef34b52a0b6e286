#include "t1rho/types.hpp"

#include <cmath>

namespace t1rho {

namespace {
constexpr double kDegToRad = M_PI / 180.0;
}

Mat3 rotation_zyx(const Vec3& rotations_deg) {
  const Vec3 r = rotations_deg * kDegToRad;
  Mat3 rx = Eigen::AngleAxisd(r[0], Vec3::UnitX()).toRotationMatrix();
  Mat3 ry = Eigen::AngleAxisd(r[1], Vec3::UnitY()).toRotationMatrix();
  Mat3 rz = Eigen::AngleAxisd(r[2], Vec3::UnitZ()).toRotationMatrix();
  return rz * ry * rx;
}

Mat4 RigidTransform::matrix() const {
  if (!finite()) throw numeric_error("rigid transform parameters must be finite");
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_zyx(rotations_deg);
  m.topRightCorner<3, 1>() = translation_mm;
  return m;
}

RigidTransform RigidTransform::inverse() const {
  Mat3 rt = rotation_zyx(rotations_deg).transpose();
  RigidTransform inv;
  // Euler angles of R^T in the same z*y*x convention.
  inv.rotations_deg[1] = std::asin(std::clamp(-rt(2, 0), -1.0, 1.0)) / kDegToRad;
  inv.rotations_deg[0] = std::atan2(rt(2, 1), rt(2, 2)) / kDegToRad;
  inv.rotations_deg[2] = std::atan2(rt(1, 0), rt(0, 0)) / kDegToRad;
  inv.translation_mm = -(rt * translation_mm);
  return inv;
}

}  // namespace t1rho
