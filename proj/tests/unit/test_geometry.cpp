#include <cmath>

#include <gtest/gtest.h>

#include "advpose/common/error.hpp"
#include "advpose/geometry/obj_loader.hpp"
#include "advpose/geometry/transform.hpp"
#include "advpose/render/renderer.hpp"
#include "test_support.hpp"

using namespace advpose;
using testing_support::Gen;

namespace {

// Rodrigues: I + sin(t) K + (1 - cos(t)) K^2, K the cross-product matrix.
Mat3 rodrigues(const Vec3& a, double t) {
  const Mat3 k{{{0, -a.z, a.y}, {a.z, 0, -a.x}, {-a.y, a.x, 0}}};
  Mat3 k2{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int m = 0; m < 3; ++m) k2[i][j] += k[i][m] * k[m][j];
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = (i == j ? 1.0 : 0.0) + std::sin(t) * k[i][j] + (1 - std::cos(t)) * k2[i][j];
  return r;
}

double max_abs_diff(const Mat3& a, const Mat3& b) {
  double m = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m = std::max(m, std::abs(a[i][j] - b[i][j]));
  return m;
}

void expect_vec_near(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(a.z, b.z, tol);
}

}  // namespace

TEST(Rotation, MatchesRodriguesOracle) {
  Gen g(11);
  for (int i = 0; i < 500; ++i) {
    const Vec3 axis = g.unit_vector();
    const double t = g.uniform(-10, 10);
    EXPECT_LT(max_abs_diff(rotation_matrix_axis_angle(axis, t), rodrigues(axis, t)), 1e-12);
  }
}

TEST(Rotation, BottomRightEntryIsZSquaredForm) {
  const Vec3 axis{0.6, 0.0, 0.8};
  const double t = 1.1;
  const Mat3 r = rotation_matrix_axis_angle(axis, t);
  EXPECT_NEAR(r[2][2], 0.64 * (1 - std::cos(t)) + std::cos(t), 1e-15);
}

TEST(Rotation, OrthonormalWithUnitDeterminant) {
  Gen g(12);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = rotation_matrix_axis_angle(g.unit_vector(), g.uniform(-20, 20));
    const Mat3 rtr = transpose(r) * r;
    EXPECT_LT(max_abs_diff(rtr, identity3()), 1e-9);
    EXPECT_NEAR(determinant(r), 1.0, 1e-9);
  }
}

TEST(Rotation, RejectsNonUnitAxis) {
  EXPECT_THROW(rotation_matrix_axis_angle({1, 1, 0}, 0.3), PreconditionError);
}

TEST(Rotation, ElementaryAxesAreRightHanded) {
  const double h = std::numbers::pi / 2;
  expect_vec_near(rotation_matrix_axis_angle(kYawAxis, h) * Vec3{1, 0, 0}, {0, 0, -1}, 1e-15);
  expect_vec_near(rotation_matrix_axis_angle(kPitchAxis, h) * Vec3{0, 1, 0}, {0, 0, 1}, 1e-15);
  expect_vec_near(rotation_matrix_axis_angle(kRollAxis, h) * Vec3{1, 0, 0}, {0, 1, 0}, 1e-15);
}

TEST(Rotation, RollIsAppliedFirst) {
  PoseParams p;
  p.yaw = std::numbers::pi / 2;
  p.roll = std::numbers::pi / 2;
  // roll takes +x to +y, which yaw leaves alone; yaw-first would give -z.
  expect_vec_near(pose_rotation(p) * Vec3{1, 0, 0}, {0, 1, 0}, 1e-15);
}

TEST(Transform, ApplyPoseMatchesComposedChain) {
  Gen g(13);
  const Mesh mesh = make_sphere_mesh(5, 7);
  const FrustumSpec spec;
  for (int i = 0; i < 200; ++i) {
    const PoseParams p = g.pose(spec);
    const Mat4 m = compose_chain(pose_chain(p));
    const auto out = apply_pose(mesh, p);
    ASSERT_EQ(out.size(), mesh.vertices.size());
    for (std::size_t k = 0; k < out.size(); ++k) expect_vec_near(out[k], apply_homogeneous(m, mesh.vertices[k]), 1e-12);
  }
}

TEST(Transform, ChainOrderMatters) {
  TransformChain c;
  c.rotations = {{kRollAxis, std::numbers::pi / 2}, {kYawAxis, std::numbers::pi / 2}};
  c.translation = {1, 2, 3};
  expect_vec_near(apply_homogeneous(compose_chain(c), {1, 0, 0}), {1, 3, 3}, 1e-15);
}

TEST(Frustum, BoundMatchesTangentFormula) {
  const FrustumSpec spec;
  EXPECT_NEAR(frustum_bound(spec, -28.0), 28.0 * std::tan(8.213 * std::numbers::pi / 180.0), 1e-12);
  EXPECT_DOUBLE_EQ(frustum_bound(spec, 0.0), 0.0);
  FrustumSpec moved = spec;
  moved.camera_z = 2.0;
  EXPECT_NEAR(frustum_bound(moved, -3.0), 5.0 * std::tan(spec.half_angle_v), 1e-12);
}

TEST(Frustum, SampledCentresProjectInFrame) {
  Gen g(14);
  SceneConfig scene = testing_support::small_scene(64);
  for (int i = 0; i < 10000; ++i) {
    PoseParams p = g.pose(scene.camera);
    if (p.z_delta > -1e-6) continue;  // camera plane
    const Projection pr = project_point(scene, object_center(*scene.mesh, p));
    EXPECT_TRUE(pr.in_frame) << p.x_delta << ' ' << p.y_delta << ' ' << p.z_delta;
  }
}

TEST(Frustum, ClampProducesValidPoses) {
  Gen g(15);
  const FrustumSpec spec;
  for (int i = 0; i < 2000; ++i) {
    PoseParams p{g.uniform(-50, 50), g.uniform(-50, 50), g.uniform(-60, 30),
                 g.uniform(-20, 20), g.uniform(-20, 20), g.uniform(-20, 20)};
    EXPECT_NO_THROW(validate_pose(clamp_to_frustum(p, spec), spec));
  }
}

TEST(Frustum, ValidateRejectsOutOfRange) {
  const FrustumSpec spec;
  EXPECT_THROW(validate_pose({0, 0, 1.0, 0, 0, 0}, spec), DomainError);
  EXPECT_THROW(validate_pose({0, 0, -29.0, 0, 0, 0}, spec), DomainError);
  EXPECT_THROW(validate_pose({5.0, 0, -3.0, 0, 0, 0}, spec), DomainError);
  EXPECT_THROW(validate_pose({0, 0, -3.0, kTwoPi, 0, 0}, spec), DomainError);
  EXPECT_NO_THROW(validate_pose({0, 0, -3.0, 0, 0, 0}, spec));
}

TEST(Angles, WrapIntoHalfOpenRange) {
  Gen g(16);
  for (int i = 0; i < 5000; ++i) {
    const double a = g.uniform(-100, 100);
    const double w = wrap_angle(a);
    EXPECT_GE(w, 0.0);
    EXPECT_LT(w, kTwoPi);
    EXPECT_NEAR(std::remainder(w - a, kTwoPi), 0.0, 1e-9);
  }
}

TEST(Angles, CircularDistanceProperties) {
  Gen g(17);
  for (int i = 0; i < 5000; ++i) {
    const double a = g.uniform(0, kTwoPi), b = g.uniform(0, kTwoPi), c = g.uniform(0, kTwoPi);
    const double d = circular_distance(a, b);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, std::numbers::pi + 1e-12);
    EXPECT_NEAR(d, circular_distance(b, a), 1e-12);
    EXPECT_NEAR(circular_distance(a, a + kTwoPi * g.integer(-3, 3)), 0.0, 1e-9);
    EXPECT_LE(circular_distance(a, c), d + circular_distance(b, c) + 1e-12);
  }
  EXPECT_NEAR(circular_distance(0.1, kTwoPi - 0.1), 0.2, 1e-12);
}

TEST(TrigEncoding, RoundTrip) {
  Gen g(18);
  const FrustumSpec spec;
  for (int i = 0; i < 2000; ++i) {
    const PoseParams p = g.pose(spec);
    const PoseParams q = decode_trig(encode_trig(p));
    EXPECT_NEAR(q.x_delta, p.x_delta, 0);
    EXPECT_NEAR(q.z_delta, p.z_delta, 0);
    EXPECT_NEAR(circular_distance(q.yaw, p.yaw), 0.0, 1e-12);
    EXPECT_NEAR(circular_distance(q.pitch, p.pitch), 0.0, 1e-12);
    EXPECT_NEAR(circular_distance(q.roll, p.roll), 0.0, 1e-12);
  }
}

TEST(TrigEncoding, DecodeIgnoresPairScale) {
  TrigPose tp = encode_trig({0, 0, -3, 1.0, 2.0, 3.0});
  for (int k = 3; k < 9; ++k) tp.values[static_cast<std::size_t>(k)] *= 3.5;
  const PoseParams p = decode_trig(tp);
  EXPECT_NEAR(p.yaw, 1.0, 1e-12);
  EXPECT_NEAR(p.pitch, 2.0, 1e-12);
  EXPECT_NEAR(p.roll, 3.0, 1e-12);
}

TEST(TrigEncoding, ZeroPairIsDegenerate) {
  TrigPose tp = encode_trig({0, 0, -3, 1.0, 2.0, 3.0});
  tp.values[5] = 0;
  tp.values[6] = 0;
  EXPECT_THROW(decode_trig(tp), DegenerateAngleError);
}

TEST(ObjLoader, LoadsQuadsTexturesAndNormalizes) {
  const Mesh m = load_obj(testing_support::fixture("cube.obj"));
  EXPECT_EQ(m.faces.size(), 12u);
  EXPECT_EQ(m.uv_coords.size(), 12u);
  EXPECT_EQ(m.normals.size(), m.vertices.size());
  ASSERT_NE(m.texture, nullptr);
  EXPECT_EQ(m.texture->width(), 4);
  const Aabb box = bounding_box(m.vertices);
  EXPECT_NEAR(box.max.x - box.min.x, 2.0, 1e-12);
  expect_vec_near(box.center(), {0, 0, 0}, 1e-12);
  EXPECT_NO_THROW(m.validate());
}

TEST(ObjLoader, ExplicitNormalsAreKept) {
  const Mesh m = load_obj(testing_support::fixture("triangle.obj"));
  ASSERT_EQ(m.faces.size(), 1u);
  for (const auto& n : m.normals) expect_vec_near(n, {0, 0, 1}, 1e-12);
}

TEST(ObjLoader, MalformedNumberReportsLine) {
  try {
    load_obj(testing_support::fixture("malformed.obj"));
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(ObjLoader, MissingFilesNameThePath) {
  try {
    load_obj(testing_support::fixture("missing_texture.obj"));
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("does_not_exist.png"), std::string::npos);
  }
  EXPECT_THROW(load_obj("/nonexistent/mesh.obj"), IoError);
}

TEST(Mesh, VertexNormalsOfFlatQuadFaceForward) {
  const Mesh q = make_quad_mesh();
  for (const auto& n : q.normals) expect_vec_near(n, {0, 0, 1}, 1e-12);
}
