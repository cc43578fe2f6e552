#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "grasp_sentinel/types.hpp"

namespace gsentinel {

inline double euclidean_distance(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }
inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Angle between two quaternions viewed as 4-vectors, in degrees.
///
/// This is half of the 3D rotation angle between the orientations. With
/// QuaternionSign::absolute the result is in [0, 90] and q / -q are at
/// distance zero; QuaternionSign::literal keeps the raw inner product and can
/// return up to 180 degrees for the same physical rotation.
inline double quaternion_angle(const Quaternion& a, const Quaternion& b,
                               QuaternionSign sign = QuaternionSign::absolute) {
    const double na = a.norm();
    const double nb = b.norm();
    if (std::abs(na - 1.0) > kUnitTolerance || std::abs(nb - 1.0) > kUnitTolerance)
        throw std::invalid_argument("quaternion_angle: input is not a unit quaternion");
    double c = a.dot(b) / (na * nb);
    if (sign == QuaternionSign::absolute) c = std::abs(c);
    c = std::clamp(c, -1.0, 1.0);
    return rad_to_deg(std::acos(c));
}

inline Quaternion operator*(const Quaternion& a, const Quaternion& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

inline Quaternion normalized(const Quaternion& q) {
    const double n = q.norm();
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

/// Rotation of `angle_deg` about `axis` (need not be unit length).
inline Quaternion axis_angle(const Vec3& axis, double angle_deg) {
    const double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
    if (n == 0.0) return {};
    const double h = 0.5 * deg_to_rad(angle_deg);
    const double s = std::sin(h) / n;
    return {std::cos(h), axis[0] * s, axis[1] * s, axis[2] * s};
}

/// Shortest-arc spherical interpolation, u in [0, 1].
inline Quaternion slerp(const Quaternion& a, Quaternion b, double u) {
    double c = a.dot(b);
    if (c < 0.0) {
        b = -b;
        c = -c;
    }
    if (c > 0.9995) {
        return normalized({a.w + u * (b.w - a.w), a.x + u * (b.x - a.x), a.y + u * (b.y - a.y),
                           a.z + u * (b.z - a.z)});
    }
    const double theta = std::acos(c);
    const double sa = std::sin((1.0 - u) * theta) / std::sin(theta);
    const double sb = std::sin(u * theta) / std::sin(theta);
    return normalized({sa * a.w + sb * b.w, sa * a.x + sb * b.x, sa * a.y + sb * b.y,
                       sa * a.z + sb * b.z});
}

/// exp(-alpha d^2) inside the position cutoff, exactly 0 beyond it.
inline double position_weight(double d, const ErrorParams& p) {
    if (d > p.delta) return 0.0;
    return std::exp(-p.alpha * d * d);
}

/// exp(-beta theta^2) inside the rotation cutoff (degrees), exactly 0 beyond it.
inline double rotation_weight(double theta_deg, const ErrorParams& p) {
    if (theta_deg > p.phi) return 0.0;
    return std::exp(-p.beta * theta_deg * theta_deg);
}

/// Context similarity of training state `s` to the query `x`.
inline double combined_weight(const WristState& x, const WristState& s, const ErrorParams& p) {
    const double wr =
        rotation_weight(quaternion_angle(x.orientation, s.orientation, p.sign), p);
    if (p.mode == ContextMode::rotation_only || wr == 0.0) return wr;
    return position_weight(euclidean_distance(x.position, s.position), p) * wr;
}

}  // namespace gsentinel
