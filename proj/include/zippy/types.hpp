#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <stdexcept>
#include <string>

namespace zippy {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Standard gravity used everywhere in the library, m/s^2.
inline constexpr double kGravity = 9.81;

/// World frame convention: +x walking direction, +y left, +z up.
inline Vec3 world_up() { return Vec3(0.0, 0.0, 1.0); }
inline Vec3 world_down() { return Vec3(0.0, 0.0, -1.0); }

enum class Foot { Left, Right };

inline Foot other_foot(Foot f) { return f == Foot::Left ? Foot::Right : Foot::Left; }
inline const char* to_string(Foot f) { return f == Foot::Left ? "left" : "right"; }

/// Raised on malformed or physically inconsistent parameter sets.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised on unreadable or ill-typed configuration input.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when a numerical routine cannot continue (singular systems,
/// non-finite state). Carries a diagnostic snapshot in the message.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

}  // namespace zippy
