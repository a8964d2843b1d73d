#include "egonav/geometry.hpp"

namespace egonav {

Matrix4 to_matrix(const Pose& p) {
    const double c = std::cos(p.yaw);
    const double s = std::sin(p.yaw);
    return {{
        {c, 0.0, s, p.x},
        {0.0, 1.0, 0.0, p.y},
        {-s, 0.0, c, p.z},
        {0.0, 0.0, 0.0, 1.0},
    }};
}

Matrix4 to_matrix(const MotionDelta& d) { return to_matrix(as_pose(d)); }

Pose as_pose(const MotionDelta& d) { return {d.dx, d.dy, d.dz, normalize_angle(d.dyaw)}; }

MotionDelta as_delta(const Pose& p) { return {p.x, p.y, p.z, normalize_angle(p.yaw)}; }

Pose compose(const Pose& parent, const Pose& child_in_parent) {
    const double c = std::cos(parent.yaw);
    const double s = std::sin(parent.yaw);
    return {
        parent.x + c * child_in_parent.x + s * child_in_parent.z,
        parent.y + child_in_parent.y,
        parent.z - s * child_in_parent.x + c * child_in_parent.z,
        normalize_angle(parent.yaw + child_in_parent.yaw),
    };
}

Pose compose(const Pose& parent, const MotionDelta& child_in_parent) {
    return compose(parent, as_pose(child_in_parent));
}

Pose inverse(const Pose& p) {
    // R^T * (-t)
    const double c = std::cos(p.yaw);
    const double s = std::sin(p.yaw);
    return {
        -(c * p.x - s * p.z),
        -p.y,
        -(s * p.x + c * p.z),
        normalize_angle(-p.yaw),
    };
}

MotionDelta relative_pose(const Pose& src_world, const Pose& tgt_world) {
    const double c = std::cos(src_world.yaw);
    const double s = std::sin(src_world.yaw);
    const double ex = tgt_world.x - src_world.x;
    const double ez = tgt_world.z - src_world.z;
    return {
        c * ex - s * ez,
        tgt_world.y - src_world.y,
        s * ex + c * ez,
        normalize_angle(tgt_world.yaw - src_world.yaw),
    };
}

Point2 transform_point(const Pose& frame, const Point2& p) {
    const double c = std::cos(frame.yaw);
    const double s = std::sin(frame.yaw);
    return {frame.x + c * p.x + s * p.z, frame.z - s * p.x + c * p.z};
}

Point2 inverse_transform_point(const Pose& frame, const Point2& p) {
    const double c = std::cos(frame.yaw);
    const double s = std::sin(frame.yaw);
    const double ex = p.x - frame.x;
    const double ez = p.z - frame.z;
    return {c * ex - s * ez, s * ex + c * ez};
}

}  // namespace egonav
