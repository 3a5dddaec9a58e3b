#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>

namespace gastream {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Unit quaternion, (w, x, y, z) order, right-handed, column-vector convention.
struct Quat {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    static Quat identity() { return {}; }
    static Quat from_axis_angle(const Vec3& axis, double radians);

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    Quat normalized() const;
    bool is_identity() const { return w == 1.0 && x == 0.0 && y == 0.0 && z == 0.0; }

    // Rotation matrix. The identity quaternion maps to an exact identity matrix.
    Mat3 to_matrix() const;

    friend Quat operator*(const Quat& a, const Quat& b);
    friend bool operator==(const Quat&, const Quat&) = default;
};

// Element of SE(3): x -> R x + t.
struct Rigid {
    Mat3 R = Mat3::Identity();
    Vec3 t = Vec3::Zero();

    static Rigid identity() { return {}; }
    static Rigid translation(const Vec3& t) { return {Mat3::Identity(), t}; }
    static Rigid from_quat(const Quat& q, const Vec3& t = Vec3::Zero()) { return {q.to_matrix(), t}; }

    // Row-major 3x4 [R | t], the wire/file layout.
    static Rigid from_row_major(const std::array<double, 12>& m);
    std::array<double, 12> to_row_major() const;

    Vec3 apply(const Vec3& p) const { return R * p + t; }
    Rigid inverse() const;
    Eigen::Matrix4d matrix() const;

    friend Rigid operator*(const Rigid& a, const Rigid& b);
};

// Largest absolute entry of R R^T - I.
double orthonormality_error(const Mat3& R);

// Symmetric 3x3 stored as its upper triangle: xx, xy, xz, yy, yz, zz.
using Cov6 = std::array<double, 6>;

inline Cov6 pack_upper(const Mat3& m)
{
    return {m(0, 0), m(0, 1), m(0, 2), m(1, 1), m(1, 2), m(2, 2)};
}

inline Mat3 unpack_upper(const Cov6& c)
{
    Mat3 m;
    m << c[0], c[1], c[2],
         c[1], c[3], c[4],
         c[2], c[4], c[5];
    return m;
}

} // namespace gastream
