#pragma once

#include <span>
#include <vector>

#include "advpose/common/vec.hpp"
#include "advpose/geometry/mesh.hpp"
#include "advpose/geometry/pose.hpp"

namespace advpose {

inline constexpr Vec3 kYawAxis{0, 1, 0};
inline constexpr Vec3 kPitchAxis{1, 0, 0};
inline constexpr Vec3 kRollAxis{0, 0, 1};

// Standard right-handed axis-angle rotation. The axis must be unit length
// within 1e-9 (PreconditionError otherwise).
Mat3 rotation_matrix_axis_angle(const Vec3& axis, double theta);

Mat4 homogeneous(const Mat3& rotation);
Mat4 translation_matrix(const Vec3& t);

// R_yaw * R_pitch * R_roll: roll is applied first, about fixed world axes.
Mat3 pose_rotation(const PoseParams& pose);

struct AxisRotation {
  Vec3 axis;
  double angle = 0.0;
};

// Rotations in application order (rotations[0] acts first), then one
// translation.
struct TransformChain {
  std::vector<AxisRotation> rotations;
  Vec3 translation;

  void validate() const;
};

// T * R_{n-1} * ... * R_0
Mat4 compose_chain(const TransformChain& chain);

// The chain equivalent of a pose: roll, pitch, yaw, then translation.
TransformChain pose_chain(const PoseParams& pose);

// out[i] = rotation * points[i] + translation, through the SIMD kernels.
void transform_points(std::span<const Vec3> points, const Mat3& rotation, const Vec3& translation,
                      std::span<Vec3> out);

// T + R_y R_p R_r v for every mesh vertex.
std::vector<Vec3> apply_pose(const Mesh& mesh, const PoseParams& pose);

Vec3 apply_homogeneous(const Mat4& m, const Vec3& p);

// Centre of the rotated mesh's bounding box, translated by the pose.
Vec3 object_center(const Mesh& mesh, const PoseParams& pose);

}  // namespace advpose
