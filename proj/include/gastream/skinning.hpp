#pragma once

#include "gastream/avatar.hpp"
#include "gastream/math.hpp"

#include <optional>
#include <vector>

namespace gastream {

// T_k(theta) for every bone: maps canonical space to posed space.
struct BoneTransforms {
    std::vector<Rigid> bones;

    std::size_t size() const { return bones.size(); }
    const Rigid& operator[](std::size_t k) const { return bones[k]; }
};

// Output of linear blend skinning. Shares the avatar's SH coefficients by copy so a
// posed set is self-contained once the avatar goes away.
struct PosedGaussians {
    int sh_degree = 0;
    std::vector<Vec3> positions;
    std::vector<Cov6> covariances;
    std::vector<Mat3> rotations;    // blended rotation R_i(theta)
    std::vector<float> opacities;
    std::vector<float> sh;
    std::vector<double> scale_bound; // largest canonical sigma, meters

    std::size_t count() const { return positions.size(); }
    int coeffs_per_splat() const { return sh_coeff_count(sh_degree); }
};

BoneTransforms forward_kinematics(const Rig& rig, const Pose& pose);

// Rotation factor U of the polar decomposition M = U P. Returns nullopt when
// det(M) <= 1e-8 (rank-deficient or orientation-reversing blends).
std::optional<Mat3> polar_rotation(const Mat3& M);

// Parallel over splats; the result does not depend on the thread count.
PosedGaussians lbs_deform(const GaussianAvatar& avatar, const BoneTransforms& bones);

// Single-threaded reference with the same per-splat arithmetic.
PosedGaussians lbs_deform_serial(const GaussianAvatar& avatar, const BoneTransforms& bones);

// Posed set with every bone at identity, without going through the rig.
PosedGaussians rest_pose(const GaussianAvatar& avatar);

} // namespace gastream
