#include "gastream/math.hpp"

#include <algorithm>

namespace gastream {

Quat Quat::from_axis_angle(const Vec3& axis, double radians)
{
    const Vec3 a = axis.normalized();
    const double s = std::sin(0.5 * radians);
    return {std::cos(0.5 * radians), a.x() * s, a.y() * s, a.z() * s};
}

Quat Quat::normalized() const
{
    const double n = norm();
    return {w / n, x / n, y / n, z / n};
}

Mat3 Quat::to_matrix() const
{
    Mat3 R;
    R(0, 0) = 1.0 - 2.0 * (y * y + z * z);
    R(0, 1) = 2.0 * (x * y - z * w);
    R(0, 2) = 2.0 * (x * z + y * w);
    R(1, 0) = 2.0 * (x * y + z * w);
    R(1, 1) = 1.0 - 2.0 * (x * x + z * z);
    R(1, 2) = 2.0 * (y * z - x * w);
    R(2, 0) = 2.0 * (x * z - y * w);
    R(2, 1) = 2.0 * (y * z + x * w);
    R(2, 2) = 1.0 - 2.0 * (x * x + y * y);
    return R;
}

Quat operator*(const Quat& a, const Quat& b)
{
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Rigid Rigid::from_row_major(const std::array<double, 12>& m)
{
    Rigid r;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) r.R(i, j) = m[i * 4 + j];
        r.t(i) = m[i * 4 + 3];
    }
    return r;
}

std::array<double, 12> Rigid::to_row_major() const
{
    std::array<double, 12> m{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) m[i * 4 + j] = R(i, j);
        m[i * 4 + 3] = t(i);
    }
    return m;
}

Rigid Rigid::inverse() const
{
    const Mat3 Rt = R.transpose();
    return {Rt, -(Rt * t)};
}

Eigen::Matrix4d Rigid::matrix() const
{
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.block<3, 3>(0, 0) = R;
    m.block<3, 1>(0, 3) = t;
    return m;
}

Rigid operator*(const Rigid& a, const Rigid& b)
{
    return {a.R * b.R, a.R * b.t + a.t};
}

double orthonormality_error(const Mat3& R)
{
    return (R * R.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
}

} // namespace gastream
