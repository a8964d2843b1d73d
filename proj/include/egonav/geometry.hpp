#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace egonav {

// Frame convention used throughout the project:
//   +z is forward at yaw 0, +x is the agent's left, +y is up (right-handed).
//   Yaw is a rotation about +y; a positive yaw turns the agent to its left,
//   i.e. the forward axis (0, 0, 1) rotates to (sin yaw, 0, cos yaw).

inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double radians) {
    double r = std::remainder(radians, 2.0 * kPi);
    if (r <= -kPi) r += 2.0 * kPi;
    return r;
}

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Planar point in the ground plane, (x, z).
struct Point2 {
    double x = 0.0;
    double z = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

inline double norm(const Point2& p) { return std::hypot(p.x, p.z); }
inline double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.z - b.z); }

/// Agent state. y is carried for the 3D transform algebra but stays 0 on a flat floor.
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double yaw = 0.0;

    static Pose identity() { return {}; }
    Point2 position() const { return {x, z}; }

    friend bool operator==(const Pose&, const Pose&) = default;
};

/// Egomotion of one action: pose of the target frame expressed in the source frame.
struct MotionDelta {
    double dx = 0.0;
    double dy = 0.0;
    double dz = 0.0;
    double dyaw = 0.0;

    static MotionDelta zero() { return {}; }

    friend bool operator==(const MotionDelta&, const MotionDelta&) = default;
};

using Matrix4 = std::array<std::array<double, 4>, 4>;

/// Homogeneous transform that maps points of the pose's frame into its parent frame.
Matrix4 to_matrix(const Pose& p);
Matrix4 to_matrix(const MotionDelta& d);

Pose as_pose(const MotionDelta& d);
MotionDelta as_delta(const Pose& p);

/// World pose of a child frame given the parent's world pose and the child's pose in the parent.
Pose compose(const Pose& parent, const Pose& child_in_parent);
Pose compose(const Pose& parent, const MotionDelta& child_in_parent);

Pose inverse(const Pose& p);

/// T_src^-1 * T_tgt: the target pose expressed in the source frame.
MotionDelta relative_pose(const Pose& src_world, const Pose& tgt_world);

Point2 transform_point(const Pose& frame, const Point2& point_in_frame);

/// Inverse of transform_point: expresses a parent-frame point in the given frame.
Point2 inverse_transform_point(const Pose& frame, const Point2& point_in_parent);

/// Bearing of a frame-local point, positive to the left, in (-pi, pi].
inline double bearing(const Point2& local) { return normalize_angle(std::atan2(local.x, local.z)); }

}  // namespace egonav
