#pragma once

#include "gastream/math.hpp"

#include <optional>

namespace gastream {

inline constexpr double kDefaultIpd = 0.055;
inline constexpr double kDefaultFovDeg = 65.0;
inline constexpr int kDefaultResolution = 1024;
inline constexpr double kDefaultNear = 0.05;
inline constexpr double kDefaultFar = 100.0;
inline constexpr double kCovDilation = 0.3; // px^2 added to every projected covariance

// Head frame to world (T^W_H).
struct HeadPose {
    Rigid head_to_world;
};

// Pinhole intrinsics. Pixel (px, py) covers [px, px+1) x [py, py+1); its center is at
// (px + 0.5, py + 0.5). Camera space: +X right, +Y down, +Z forward.
struct Intrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;
    double near = kDefaultNear;
    double far = kDefaultFar;
};

void validate(const Intrinsics& K);

struct StereoCameraPair {
    Intrinsics intrinsics;
    Rigid world_to_camera_left;
    Rigid world_to_camera_right;

    const Rigid& view(int eye) const { return eye == 0 ? world_to_camera_left : world_to_camera_right; }
};

// Eyes sit at -ipd/2 and +ipd/2 along the head's local +X axis; world-to-camera
// transforms are the inverses of the composed eye poses.
StereoCameraPair eye_extrinsics(const HeadPose& head, double ipd);

Intrinsics intrinsics_from_fov(double fov_deg, int width, int height, double near = kDefaultNear,
                               double far = kDefaultFar);

// World position of the camera center for a world-to-camera transform.
inline Vec3 camera_center(const Rigid& world_to_camera)
{
    return -(world_to_camera.R.transpose() * world_to_camera.t);
}

struct ProjectedGaussian {
    double u = 0.0; // pixels
    double v = 0.0;
    double cov_uu = 0.0; // 2x2 screen covariance, px^2, dilation included
    double cov_uv = 0.0;
    double cov_vv = 0.0;
    double depth = 0.0; // camera-space z, meters
};

// Camera-space quantities that depend only on the rotation block of the view;
// two eyes of a head share them.
struct ViewSpaceGaussian {
    Vec3 rotated_mean; // W * mean (translation not yet applied)
    Cov6 cov;          // W * cov * W^T
};

ViewSpaceGaussian rotate_to_view(const Vec3& mean, const Cov6& cov, const Mat3& W);

// EWA projection of a view-space Gaussian; nullopt when depth is outside (near, far).
std::optional<ProjectedGaussian> finish_projection(const ViewSpaceGaussian& g, const Vec3& view_translation,
                                                   const Intrinsics& K);

std::optional<ProjectedGaussian> project_gaussian(const Vec3& mean, const Cov6& cov, const Rigid& world_to_camera,
                                                  const Intrinsics& K);

} // namespace gastream
