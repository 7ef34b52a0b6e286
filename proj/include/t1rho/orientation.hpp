#pragma once

#include "t1rho/types.hpp"

#include <array>

namespace t1rho {

/// Axis permutation and flips taking an arbitrary volume to RAS+ layout.
/// source_axis[i] is the input array axis that becomes output axis i
/// (output axis i points along world axis i); flip[i] reverses it.
struct OrientationOps {
  std::array<int, 3> source_axis = {0, 1, 2};
  std::array<bool, 3> flip = {false, false, false};

  bool identity() const {
    return source_axis == std::array<int, 3>{0, 1, 2} &&
           flip == std::array<bool, 3>{false, false, false};
  }
};

/// Detects the dominant world axis of each affine column (argmax |cosine|,
/// ties to the lower world axis). Degenerate oblique affines where two
/// columns share a dominant axis are rejected.
OrientationOps detect_orientation(const Mat4& affine);

/// Applies orientation ops: permutes/flips the data axes and rewrites the
/// affine so every voxel keeps its world position.
template <typename Scalar>
VolumeT<Scalar> apply_orientation(const VolumeT<Scalar>& v, const OrientationOps& ops) {
  VolumeT<Scalar> out;
  for (int i = 0; i < 3; ++i) {
    out.dims[i] = v.dims[ops.source_axis[i]];
    out.spacing[i] = v.spacing[ops.source_axis[i]];
  }
  // Index map P: new index -> old index, old = P * new (homogeneous).
  Mat4 p = Mat4::Zero();
  p(3, 3) = 1.0;
  for (int i = 0; i < 3; ++i) {
    int src = ops.source_axis[i];
    if (ops.flip[i]) {
      p(src, i) = -1.0;
      p(src, 3) = v.dims[src] - 1;
    } else {
      p(src, i) = 1.0;
    }
  }
  out.affine = v.affine * p;
  out.data.resize(v.data.size());
  for (int k = 0; k < out.dims[2]; ++k)
    for (int j = 0; j < out.dims[1]; ++j)
      for (int i = 0; i < out.dims[0]; ++i) {
        int n[3] = {i, j, k};
        int o[3];
        for (int a = 0; a < 3; ++a) {
          int src = ops.source_axis[a];
          o[src] = ops.flip[a] ? v.dims[src] - 1 - n[a] : n[a];
        }
        out.data[out.index(i, j, k)] = v.at(o[0], o[1], o[2]);
      }
  return out;
}

/// Reorients a volume so the affine rotation block is closest to a positive
/// diagonal (the RAS+ contract). World positions are unchanged.
template <typename Scalar>
std::pair<VolumeT<Scalar>, OrientationOps> canonical_orientation(const VolumeT<Scalar>& v) {
  OrientationOps ops = detect_orientation(v.affine);
  if (ops.identity()) return {v, ops};
  return {apply_orientation(v, ops), ops};
}

}  // namespace t1rho
