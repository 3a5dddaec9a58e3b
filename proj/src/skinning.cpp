#include "gastream/skinning.hpp"

#include "gastream/errors.hpp"

#include <cmath>

namespace gastream {

namespace {

// Joint rotation q expressed in the rest frame B of the bone, applied about the joint
// center: B (q, 0) B^-1. The conjugated quaternion is (w, R_B v), so an identity
// joint rotation yields an exact identity transform.
Rigid rotate_about_joint(const Rigid& rest, const Quat& q)
{
    if (q.is_identity()) return Rigid::identity();
    const Vec3 axis = rest.R * Vec3(q.x, q.y, q.z);
    const Quat conj = Quat{q.w, axis.x(), axis.y(), axis.z()}.normalized();
    const Mat3 R = conj.to_matrix();
    return {R, rest.t - R * rest.t};
}

struct SplatSkin {
    Vec3 position;
    Mat3 rotation;
    Cov6 covariance;
    double scale_bound;
};

SplatSkin skin_splat(const GaussianAvatar& avatar, const BoneTransforms& bones, std::size_t i)
{
    const auto& g = avatar.gaussians;
    const auto& row = avatar.weights.rows[i];
    const auto& pf = g.positions[i];
    const Vec3 p(pf[0], pf[1], pf[2]);

    // Stored weights are floats; dividing by their double sum keeps the blend affine.
    double wsum = 0.0;
    for (const auto& inf : row)
        if (inf.bone != kNoBone) wsum += inf.weight;

    Vec3 displacement = Vec3::Zero();
    Mat3 blended = Mat3::Zero();
    const Mat3* first = nullptr;
    bool uniform_rotation = true;
    std::size_t heaviest = kMaxInfluences;
    for (std::size_t s = 0; s < kMaxInfluences; ++s) {
        const auto& inf = row[s];
        if (inf.bone == kNoBone || inf.weight == 0.0f) continue;
        const Rigid& T = bones[inf.bone];
        const double w = inf.weight / wsum;
        displacement += w * (T.apply(p) - p);
        blended += w * T.R;
        if (first == nullptr) {
            first = &T.R;
        } else if (T.R != *first) {
            uniform_rotation = false;
        }
        if (heaviest == kMaxInfluences || inf.weight > row[heaviest].weight) heaviest = s;
    }

    SplatSkin out;
    out.position = p + displacement;
    if (first == nullptr) {
        out.rotation = Mat3::Identity();
    } else if (uniform_rotation) {
        out.rotation = *first;
    } else if (auto R = polar_rotation(blended)) {
        out.rotation = *R;
    } else {
        out.rotation = bones[row[heaviest].bone].R;
    }
    const Mat3 sigma = g.covariance(i);
    out.covariance = pack_upper(out.rotation * sigma * out.rotation.transpose());
    const auto& s = g.scales[i];
    out.scale_bound = std::max({double(s[0]), double(s[1]), double(s[2])});
    return out;
}

PosedGaussians allocate_posed(const GaussianAvatar& avatar)
{
    const auto& g = avatar.gaussians;
    PosedGaussians out;
    out.sh_degree = g.sh_degree;
    out.positions.resize(g.count());
    out.covariances.resize(g.count());
    out.rotations.resize(g.count());
    out.scale_bound.resize(g.count());
    out.opacities = g.opacities;
    out.sh = g.sh;
    return out;
}

void check_bones(const GaussianAvatar& avatar, const BoneTransforms& bones)
{
    if (bones.size() != avatar.rig.bone_count())
        throw ArgumentError("bone transforms do not match the avatar's rig");
}

void store(PosedGaussians& out, std::size_t i, const SplatSkin& s)
{
    out.positions[i] = s.position;
    out.rotations[i] = s.rotation;
    out.covariances[i] = s.covariance;
    out.scale_bound[i] = s.scale_bound;
}

} // namespace

BoneTransforms forward_kinematics(const Rig& rig, const Pose& pose)
{
    const std::size_t bones = rig.bone_count();
    if (bones == 0 || pose.joint_rotations.size() != bones - 1) {
        throw ArgumentError("forward_kinematics: pose has " + std::to_string(pose.joint_rotations.size()) +
                            " joint rotations for a rig of " + std::to_string(bones) + " bones");
    }
    BoneTransforms out;
    out.bones.resize(bones);
    // T_root = root * B_root * B_root^-1; T_k = T_parent * B_k (q_k, 0) B_k^-1.
    out.bones[0] = Rigid::from_quat(pose.root_rotation, pose.root_translation);
    for (std::size_t k = 1; k < bones; ++k) {
        const auto parent = static_cast<std::size_t>(rig.parents[k]);
        out.bones[k] = out.bones[parent] * rotate_about_joint(rig.rest(k), pose.joint_rotations[k - 1]);
    }
    return out;
}

std::optional<Mat3> polar_rotation(const Mat3& M)
{
    if (!(M.determinant() > 1e-8)) return std::nullopt;

    // Newton iteration with determinant scaling (Higham).
    Mat3 X = M;
    for (int iter = 0; iter < 100; ++iter) {
        const double gamma = std::pow(std::abs(X.determinant()), -1.0 / 3.0);
        const Mat3 next = 0.5 * (gamma * X + X.inverse().transpose() / gamma);
        const double step = (next - X).cwiseAbs().maxCoeff();
        X = next;
        if (step < 1e-15) break;
    }
    return 0.5 * (X + X.inverse().transpose());
}

PosedGaussians lbs_deform(const GaussianAvatar& avatar, const BoneTransforms& bones)
{
    check_bones(avatar, bones);
    PosedGaussians out = allocate_posed(avatar);
    const auto n = static_cast<std::ptrdiff_t>(avatar.gaussians.count());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        store(out, idx, skin_splat(avatar, bones, idx));
    }
    return out;
}

PosedGaussians lbs_deform_serial(const GaussianAvatar& avatar, const BoneTransforms& bones)
{
    check_bones(avatar, bones);
    PosedGaussians out = allocate_posed(avatar);
    for (std::size_t i = 0; i < avatar.gaussians.count(); ++i) store(out, i, skin_splat(avatar, bones, i));
    return out;
}

PosedGaussians rest_pose(const GaussianAvatar& avatar)
{
    BoneTransforms identity;
    identity.bones.assign(avatar.rig.bone_count(), Rigid::identity());
    return lbs_deform(avatar, identity);
}

} // namespace gastream
