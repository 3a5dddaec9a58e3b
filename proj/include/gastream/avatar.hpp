#pragma once

#include "gastream/math.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gastream {

inline constexpr int kMaxInfluences = 8;
inline constexpr std::uint16_t kNoBone = 0xFFFF;
inline constexpr double kWeightTolerance = 1e-5;

inline constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

// Canonical splats. Stored in single precision, matching the container layout,
// so that a load/save round trip is exact.
struct GaussianSet {
    int sh_degree = 0;
    std::vector<std::array<float, 3>> positions;
    std::vector<std::array<float, 3>> scales;
    std::vector<std::array<float, 4>> rotations; // w, x, y, z
    std::vector<float> opacities;
    std::vector<float> sh; // count * coeffs * 3, coefficient-major per splat

    std::size_t count() const { return positions.size(); }
    int coeffs_per_splat() const { return sh_coeff_count(sh_degree); }

    std::span<const float> sh_of(std::size_t i) const
    {
        const std::size_t n = static_cast<std::size_t>(coeffs_per_splat()) * 3;
        return {sh.data() + i * n, n};
    }

    Quat rotation(std::size_t i) const
    {
        const auto& r = rotations[i];
        return {r[0], r[1], r[2], r[3]};
    }

    // R(r_i) diag(sigma_i^2) R(r_i)^T in double precision.
    Mat3 covariance(std::size_t i) const;

    friend bool operator==(const GaussianSet&, const GaussianSet&) = default;
};

struct Rig {
    std::vector<std::int32_t> parents;              // root = -1
    std::vector<std::array<float, 12>> rest_global; // row-major 3x4 bone frames in canonical space
    std::vector<std::string> names;

    std::size_t bone_count() const { return parents.size(); }
    Rigid rest(std::size_t k) const;

    friend bool operator==(const Rig&, const Rig&) = default;
};

struct Influence {
    std::uint16_t bone = kNoBone;
    float weight = 0.0f;

    friend bool operator==(const Influence&, const Influence&) = default;
};

// Up to kMaxInfluences (bone, weight) pairs per splat; unused slots hold kNoBone.
struct SkinWeights {
    std::vector<std::array<Influence, kMaxInfluences>> rows;

    std::size_t count() const { return rows.size(); }

    friend bool operator==(const SkinWeights&, const SkinWeights&) = default;
};

struct AvatarMetadata {
    std::string name;
    std::string source_hash;
    std::string units = "meters";

    friend bool operator==(const AvatarMetadata&, const AvatarMetadata&) = default;
};

struct GaussianAvatar {
    GaussianSet gaussians;
    Rig rig;
    SkinWeights weights;
    AvatarMetadata metadata;

    friend bool operator==(const GaussianAvatar&, const GaussianAvatar&) = default;
};

// Body pose: root transform plus one local rotation per non-root bone.
struct Pose {
    Quat root_rotation;
    Vec3 root_translation = Vec3::Zero();
    std::vector<Quat> joint_rotations;

    static Pose identity(std::size_t bone_count);
};

// Throws ValidationError if `pose` cannot drive a rig with `bone_count` bones.
void validate_pose(const Pose& pose, std::size_t bone_count);

// Normalizes quaternions and skin weights in place (idempotent), then checks every
// invariant. Throws ValidationError naming the first offending splat or bone.
void normalize_and_validate(GaussianAvatar& avatar);

std::vector<std::uint8_t> serialize_avatar(const GaussianAvatar& avatar);
GaussianAvatar deserialize_avatar(std::span<const std::uint8_t> bytes);

GaussianAvatar load_avatar(const std::filesystem::path& path);
void save_avatar(const GaussianAvatar& avatar, const std::filesystem::path& path);

struct SynthSpec {
    std::size_t splat_count = 0;
    std::size_t bone_count = 0;
    std::uint64_t seed = 0;
    int sh_degree = 3;
};

// Deterministic procedural avatar: a tree of capsule-shaped bone segments with
// splats scattered inside the capsules and distance-falloff skin weights.
GaussianAvatar synth_avatar(const SynthSpec& spec);

} // namespace gastream
