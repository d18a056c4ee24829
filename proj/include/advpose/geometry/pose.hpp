#pragma once

#include <array>
#include <numbers>
#include <string_view>

namespace advpose {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

// 6D object pose: translation in world units, yaw/pitch/roll in radians
// about the y, x and z axes.
struct PoseParams {
  double x_delta = 0.0;
  double y_delta = 0.0;
  double z_delta = 0.0;
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;

  bool operator==(const PoseParams&) const = default;
};

enum class PoseParam { kX = 0, kY, kZ, kYaw, kPitch, kRoll };

inline constexpr std::array<PoseParam, 6> kAllPoseParams = {PoseParam::kX,   PoseParam::kY,     PoseParam::kZ,
                                                            PoseParam::kYaw, PoseParam::kPitch, PoseParam::kRoll};

std::string_view param_name(PoseParam p);
// Accepts "x", "y", "z", "yaw", "pitch", "roll"; throws UsageError otherwise.
PoseParam parse_param(std::string_view name);
constexpr bool is_angle(PoseParam p) { return p >= PoseParam::kYaw; }

double get(const PoseParams& pose, PoseParam p);
void set(PoseParams& pose, PoseParam p, double value);

// Translation plus one (cos, sin) pair per angle. The pairs are free
// parameters during descent and need not stay on the unit circle.
struct TrigPose {
  // x, y, z, cos yaw, sin yaw, cos pitch, sin pitch, cos roll, sin roll
  std::array<double, 9> values{};

  bool operator==(const TrigPose&) const = default;
};

inline constexpr std::array<std::string_view, 9> kTrigNames = {"x", "y", "z", "cos_yaw", "sin_yaw", "cos_pitch",
                                                               "sin_pitch", "cos_roll", "sin_roll"};

// Camera half-angle and the allowed depth range for the object centre.
struct FrustumSpec {
  double half_angle_v = deg_to_rad(8.213);
  double camera_z = 0.0;
  double z_min = -28.0;
  double z_max = 0.0;

  // Throws PreconditionError unless 0 < half_angle_v < pi/2 and z_min <= z_max.
  void validate() const;
};

// Largest |x| (and |y|) that keeps the centre in frame at depth z:
// |camera_z - z| * tan(half_angle_v). Throws DomainError outside the depth range.
double frustum_bound(const FrustumSpec& spec, double z_delta);

// Maps into [0, 2*pi).
double wrap_angle(double theta);

// min(|a - b|, 2*pi - |a - b|) after wrapping; always in [0, pi].
double circular_distance(double a, double b);

// Throws DomainError naming the offending field.
void validate_pose(const PoseParams& pose, const FrustumSpec& spec);

// Clamps z into the depth range, then x and y into [-s, s] at that depth.
// Angles are wrapped.
PoseParams clamp_to_frustum(PoseParams pose, const FrustumSpec& spec);

TrigPose encode_trig(const PoseParams& pose);

// Angles via atan2, wrapped into [0, 2*pi). A (0, 0) pair raises
// DegenerateAngleError.
PoseParams decode_trig(const TrigPose& tp);

}  // namespace advpose
