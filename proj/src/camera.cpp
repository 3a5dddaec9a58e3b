#include "gastream/camera.hpp"

#include "gastream/errors.hpp"

#include <cmath>
#include <numbers>

namespace gastream {

void validate(const Intrinsics& K)
{
    if (!(K.fx > 0.0) || !(K.fy > 0.0)) throw ArgumentError("intrinsics: focal lengths must be positive");
    if (!(K.near > 0.0) || !(K.near < K.far)) throw ArgumentError("intrinsics: need 0 < near < far");
    if (K.width <= 0 || K.height <= 0) throw ArgumentError("intrinsics: image size must be positive");
}

StereoCameraPair eye_extrinsics(const HeadPose& head, double ipd)
{
    if (!(ipd > 0.0)) throw ArgumentError("eye_extrinsics: ipd must be positive");
    const Rigid head_to_left = Rigid::translation(Vec3(-0.5 * ipd, 0.0, 0.0));
    const Rigid head_to_right = Rigid::translation(Vec3(0.5 * ipd, 0.0, 0.0));
    StereoCameraPair pair;
    pair.world_to_camera_left = (head.head_to_world * head_to_left).inverse();
    pair.world_to_camera_right = (head.head_to_world * head_to_right).inverse();
    return pair;
}

Intrinsics intrinsics_from_fov(double fov_deg, int width, int height, double near, double far)
{
    if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw ArgumentError("intrinsics_from_fov: fov must be in (0, 180) degrees");
    if (width <= 0 || height <= 0) throw ArgumentError("intrinsics_from_fov: image size must be positive");
    const double half = 0.5 * fov_deg * std::numbers::pi / 180.0;
    const double t = std::tan(half);
    Intrinsics K;
    K.fx = 0.5 * width / t;
    K.fy = 0.5 * height / t;
    K.cx = 0.5 * width;
    K.cy = 0.5 * height;
    K.width = width;
    K.height = height;
    K.near = near;
    K.far = far;
    validate(K);
    return K;
}

ViewSpaceGaussian rotate_to_view(const Vec3& mean, const Cov6& cov, const Mat3& W)
{
    const Mat3 S = unpack_upper(cov);
    return {W * mean, pack_upper(W * S * W.transpose())};
}

std::optional<ProjectedGaussian> finish_projection(const ViewSpaceGaussian& g, const Vec3& view_translation,
                                                   const Intrinsics& K)
{
    const Vec3 t = g.rotated_mean + view_translation;
    if (!(t.z() > K.near && t.z() < K.far)) return std::nullopt;

    const double inv_z = 1.0 / t.z();
    const double inv_z2 = inv_z * inv_z;
    // Perspective Jacobian rows: [fx/z, 0, -fx x/z^2], [0, fy/z, -fy y/z^2].
    const double j00 = K.fx * inv_z;
    const double j02 = -K.fx * t.x() * inv_z2;
    const double j11 = K.fy * inv_z;
    const double j12 = -K.fy * t.y() * inv_z2;

    const auto& c = g.cov; // xx xy xz yy yz zz
    // J C J^T with J sparse.
    const double a0 = j00 * c[0] + j02 * c[2];
    const double a1 = j00 * c[1] + j02 * c[4];
    const double a2 = j00 * c[2] + j02 * c[5];
    const double b1 = j11 * c[3] + j12 * c[4];
    const double b2 = j11 * c[4] + j12 * c[5];

    ProjectedGaussian out;
    out.u = K.fx * t.x() * inv_z + K.cx;
    out.v = K.fy * t.y() * inv_z + K.cy;
    out.cov_uu = a0 * j00 + a2 * j02 + kCovDilation;
    out.cov_uv = a1 * j11 + a2 * j12;
    out.cov_vv = b1 * j11 + b2 * j12 + kCovDilation;
    out.depth = t.z();
    return out;
}

std::optional<ProjectedGaussian> project_gaussian(const Vec3& mean, const Cov6& cov, const Rigid& world_to_camera,
                                                  const Intrinsics& K)
{
    return finish_projection(rotate_to_view(mean, cov, world_to_camera.R), world_to_camera.t, K);
}

} // namespace gastream
