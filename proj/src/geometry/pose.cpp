#include "advpose/geometry/pose.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "advpose/common/error.hpp"

namespace advpose {

std::string_view param_name(PoseParam p) {
  switch (p) {
    case PoseParam::kX:
      return "x";
    case PoseParam::kY:
      return "y";
    case PoseParam::kZ:
      return "z";
    case PoseParam::kYaw:
      return "yaw";
    case PoseParam::kPitch:
      return "pitch";
    case PoseParam::kRoll:
      return "roll";
  }
  return "?";
}

PoseParam parse_param(std::string_view name) {
  for (PoseParam p : kAllPoseParams)
    if (param_name(p) == name) return p;
  throw UsageError("unknown pose parameter '" + std::string(name) + "' (expected x, y, z, yaw, pitch or roll)");
}

double get(const PoseParams& pose, PoseParam p) {
  switch (p) {
    case PoseParam::kX:
      return pose.x_delta;
    case PoseParam::kY:
      return pose.y_delta;
    case PoseParam::kZ:
      return pose.z_delta;
    case PoseParam::kYaw:
      return pose.yaw;
    case PoseParam::kPitch:
      return pose.pitch;
    case PoseParam::kRoll:
      return pose.roll;
  }
  return 0.0;
}

void set(PoseParams& pose, PoseParam p, double value) {
  switch (p) {
    case PoseParam::kX:
      pose.x_delta = value;
      break;
    case PoseParam::kY:
      pose.y_delta = value;
      break;
    case PoseParam::kZ:
      pose.z_delta = value;
      break;
    case PoseParam::kYaw:
      pose.yaw = value;
      break;
    case PoseParam::kPitch:
      pose.pitch = value;
      break;
    case PoseParam::kRoll:
      pose.roll = value;
      break;
  }
}

void FrustumSpec::validate() const {
  if (!(half_angle_v > 0.0 && half_angle_v < std::numbers::pi / 2))
    throw PreconditionError("frustum half-angle must lie in (0, pi/2)");
  if (!(z_min <= z_max)) throw PreconditionError("depth range must satisfy z_min <= z_max");
}

double frustum_bound(const FrustumSpec& spec, double z_delta) {
  if (!(z_delta >= spec.z_min && z_delta <= spec.z_max))
    throw DomainError("z_delta " + std::to_string(z_delta) + " outside depth range [" + std::to_string(spec.z_min) +
                      ", " + std::to_string(spec.z_max) + "]");
  return std::abs(spec.camera_z - z_delta) * std::tan(spec.half_angle_v);
}

double wrap_angle(double theta) {
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative can round up to exactly 2*pi.
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double circular_distance(double a, double b) {
  const double d = std::abs(wrap_angle(a) - wrap_angle(b));
  return std::min(d, kTwoPi - d);
}

void validate_pose(const PoseParams& pose, const FrustumSpec& spec) {
  for (PoseParam p : kAllPoseParams)
    if (!std::isfinite(get(pose, p))) throw DomainError(std::string(param_name(p)) + " is not finite");
  if (!(pose.z_delta >= spec.z_min && pose.z_delta <= spec.z_max))
    throw DomainError("z outside depth range [" + std::to_string(spec.z_min) + ", " + std::to_string(spec.z_max) + "]");
  const double s = frustum_bound(spec, pose.z_delta);
  if (std::abs(pose.x_delta) > s) throw DomainError("x outside frustum bound +/-" + std::to_string(s));
  if (std::abs(pose.y_delta) > s) throw DomainError("y outside frustum bound +/-" + std::to_string(s));
  for (PoseParam p : {PoseParam::kYaw, PoseParam::kPitch, PoseParam::kRoll}) {
    const double a = get(pose, p);
    if (a < 0.0 || a >= kTwoPi) throw DomainError(std::string(param_name(p)) + " outside [0, 2*pi)");
  }
}

PoseParams clamp_to_frustum(PoseParams pose, const FrustumSpec& spec) {
  pose.z_delta = std::clamp(pose.z_delta, spec.z_min, spec.z_max);
  const double s = frustum_bound(spec, pose.z_delta);
  pose.x_delta = std::clamp(pose.x_delta, -s, s);
  pose.y_delta = std::clamp(pose.y_delta, -s, s);
  pose.yaw = wrap_angle(pose.yaw);
  pose.pitch = wrap_angle(pose.pitch);
  pose.roll = wrap_angle(pose.roll);
  return pose;
}

TrigPose encode_trig(const PoseParams& pose) {
  return {{pose.x_delta, pose.y_delta, pose.z_delta, std::cos(pose.yaw), std::sin(pose.yaw), std::cos(pose.pitch),
           std::sin(pose.pitch), std::cos(pose.roll), std::sin(pose.roll)}};
}

namespace {

double decode_angle(double c, double s, std::string_view name) {
  if (c == 0.0 && s == 0.0) throw DegenerateAngleError(std::string(name) + ": (cos, sin) pair is (0, 0)");
  return wrap_angle(std::atan2(s, c));
}

}  // namespace

PoseParams decode_trig(const TrigPose& tp) {
  const auto& v = tp.values;
  return {v[0], v[1], v[2], decode_angle(v[3], v[4], "yaw"), decode_angle(v[5], v[6], "pitch"),
          decode_angle(v[7], v[8], "roll")};
}

}  // namespace advpose
