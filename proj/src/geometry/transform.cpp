#include "advpose/geometry/transform.hpp"

#include <cmath>

#include "advpose/common/error.hpp"
#include "advpose/simd/kernels.hpp"

namespace advpose {

Mat3 rotation_matrix_axis_angle(const Vec3& axis, double theta) {
  if (std::abs(norm(axis) - 1.0) > 1e-9) throw PreconditionError("rotation axis must be unit length");
  const double c = std::cos(theta), s = std::sin(theta), t = 1.0 - c;
  const double x = axis.x, y = axis.y, z = axis.z;
  return {{{x * x * t + c, x * y * t - z * s, x * z * t + y * s},
           {x * y * t + z * s, y * y * t + c, y * z * t - x * s},
           {x * z * t - y * s, y * z * t + x * s, z * z * t + c}}};
}

Mat4 homogeneous(const Mat3& r) {
  Mat4 m = identity4();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m[i][j] = r[i][j];
  return m;
}

Mat4 translation_matrix(const Vec3& t) {
  Mat4 m = identity4();
  m[0][3] = t.x;
  m[1][3] = t.y;
  m[2][3] = t.z;
  return m;
}

Mat3 pose_rotation(const PoseParams& pose) {
  return rotation_matrix_axis_angle(kYawAxis, pose.yaw) * rotation_matrix_axis_angle(kPitchAxis, pose.pitch) *
         rotation_matrix_axis_angle(kRollAxis, pose.roll);
}

void TransformChain::validate() const {
  for (const auto& r : rotations)
    if (std::abs(norm(r.axis) - 1.0) > 1e-9) throw PreconditionError("chain rotation axis must be unit length");
}

Mat4 compose_chain(const TransformChain& chain) {
  chain.validate();
  Mat4 rot = identity4();
  for (const auto& r : chain.rotations) rot = homogeneous(rotation_matrix_axis_angle(r.axis, r.angle)) * rot;
  return translation_matrix(chain.translation) * rot;
}

TransformChain pose_chain(const PoseParams& pose) {
  return {{{kRollAxis, pose.roll}, {kPitchAxis, pose.pitch}, {kYawAxis, pose.yaw}},
          {pose.x_delta, pose.y_delta, pose.z_delta}};
}

void transform_points(std::span<const Vec3> points, const Mat3& rotation, const Vec3& translation,
                      std::span<Vec3> out) {
  if (out.size() != points.size()) throw PreconditionError("transform_points: output size mismatch");
  const std::size_t n = points.size();
  std::vector<double> soa(6 * n);
  double* xs = soa.data();
  double* ys = xs + n;
  double* zs = ys + n;
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = points[i].x;
    ys[i] = points[i].y;
    zs[i] = points[i].z;
  }
  const double m[9] = {rotation[0][0], rotation[0][1], rotation[0][2], rotation[1][0], rotation[1][1],
                       rotation[1][2], rotation[2][0], rotation[2][1], rotation[2][2]};
  const double t[3] = {translation.x, translation.y, translation.z};
  simd::active().transform_points(m, t, xs, ys, zs, zs + n, zs + 2 * n, zs + 3 * n, n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {zs[n + i], zs[2 * n + i], zs[3 * n + i]};
}

std::vector<Vec3> apply_pose(const Mesh& mesh, const PoseParams& pose) {
  std::vector<Vec3> out(mesh.vertices.size());
  transform_points(mesh.vertices, pose_rotation(pose), {pose.x_delta, pose.y_delta, pose.z_delta}, out);
  return out;
}

Vec3 apply_homogeneous(const Mat4& m, const Vec3& p) {
  return {((m[0][0] * p.x + m[0][1] * p.y) + m[0][2] * p.z) + m[0][3],
          ((m[1][0] * p.x + m[1][1] * p.y) + m[1][2] * p.z) + m[1][3],
          ((m[2][0] * p.x + m[2][1] * p.y) + m[2][2] * p.z) + m[2][3]};
}

Vec3 object_center(const Mesh& mesh, const PoseParams& pose) {
  std::vector<Vec3> rotated(mesh.vertices.size());
  transform_points(mesh.vertices, pose_rotation(pose), {}, rotated);
  return bounding_box(rotated).center() + Vec3{pose.x_delta, pose.y_delta, pose.z_delta};
}

}  // namespace advpose
