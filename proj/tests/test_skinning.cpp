#include "gastream/errors.hpp"
#include "support.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <doctest.h>

#include <numbers>

using namespace testing;

namespace {

// Literal chain: G_root = root * B_root; G_k = G_parent * L_k where L_k is the rest-local
// transform B_parent^-1 B_k with its rotation right-multiplied by q_k; T_k = G_k B_k^-1.
std::vector<Eigen::Matrix4d> chain_oracle(const Rig& rig, const Pose& pose)
{
    auto M = [](const Rigid& r) { return r.matrix(); };
    auto rot4 = [](const Quat& q) {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = Eigen::Quaterniond(q.w, q.x, q.y, q.z).normalized().toRotationMatrix();
        return m;
    };
    const std::size_t K = rig.bone_count();
    std::vector<Eigen::Matrix4d> G(K), T(K);
    Eigen::Matrix4d root = rot4(pose.root_rotation);
    root.topRightCorner<3, 1>() = pose.root_translation;
    G[0] = root * M(rig.rest(0));
    for (std::size_t k = 1; k < K; ++k) {
        const auto p = static_cast<std::size_t>(rig.parents[k]);
        const Eigen::Matrix4d local = M(rig.rest(p)).inverse() * M(rig.rest(k));
        G[k] = G[p] * local * rot4(pose.joint_rotations[k - 1]);
    }
    for (std::size_t k = 0; k < K; ++k) T[k] = G[k] * M(rig.rest(k)).inverse();
    return T;
}

double max_diff(const Rigid& a, const Eigen::Matrix4d& b)
{
    return (a.matrix() - b).cwiseAbs().maxCoeff();
}

Rig random_rig(std::mt19937_64& rng, std::size_t K)
{
    Rig rig;
    for (std::size_t k = 0; k < K; ++k) {
        rig.parents.push_back(k == 0 ? -1 : static_cast<std::int32_t>(rng() % k));
        const Rigid r{random_rotation(rng), Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1))};
        const auto m = r.to_row_major();
        std::array<float, 12> f;
        for (int i = 0; i < 12; ++i) f[i] = static_cast<float>(m[i]);
        rig.rest_global.push_back(f);
        rig.names.push_back("b" + std::to_string(k));
    }
    return rig;
}

Pose random_pose(std::mt19937_64& rng, std::size_t K)
{
    Pose p = Pose::identity(K);
    p.root_rotation = random_quat(rng);
    p.root_translation = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    for (auto& q : p.joint_rotations) q = random_quat(rng);
    return p;
}

Mat3 svd_polar(const Mat3& M)
{
    Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

} // namespace

TEST_CASE("FK: identity pose gives identity transforms")
{
    const auto a = synth_avatar({10, 24, 5, 0});
    const auto T = forward_kinematics(a.rig, Pose::identity(24));
    for (const auto& t : T.bones) {
        CHECK(t.R == Mat3::Identity());
        CHECK(t.t == Vec3::Zero());
    }
}

TEST_CASE("FK: root translation shifts every bone")
{
    const auto a = synth_avatar({10, 24, 5, 0});
    Pose p = Pose::identity(24);
    p.root_translation = Vec3(0.3, -1.2, 2.0);
    for (const auto& t : forward_kinematics(a.rig, p).bones) {
        CHECK(t.R == Mat3::Identity());
        CHECK(t.t == p.root_translation);
    }
}

TEST_CASE("FK: two-bone chain, 90 degrees about z at joint 1")
{
    Rig rig;
    rig.parents = {-1, 0};
    rig.rest_global = {{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0}, {1, 0, 0, 0, 0, 1, 0, 1, 0, 0, 1, 0}};
    rig.names = {"root", "child"};
    Pose pose = Pose::identity(2);
    pose.joint_rotations[0] = Quat::from_axis_angle(Vec3::UnitZ(), std::numbers::pi / 2);
    const auto T = forward_kinematics(rig, pose);

    // Hand-composed: rotate about the joint at (0,1,0): T = Tr(c) Rz(90) Tr(-c).
    Eigen::Matrix4d tr = Eigen::Matrix4d::Identity(), rz = Eigen::Matrix4d::Identity(), back = tr;
    tr(1, 3) = 1.0;
    back(1, 3) = -1.0;
    rz.topLeftCorner<2, 2>() << 0, -1, 1, 0;
    CHECK(max_diff(T[1], tr * rz * back) < 1e-6);
    CHECK(max_diff(T[1], chain_oracle(rig, pose)[1]) < 1e-12);
    CHECK(T[0].R == Mat3::Identity());
    // The joint center is fixed; the bone tip (0,2,0) swings to (-1,1,0).
    CHECK((T[1].apply(Vec3(0, 2, 0)) - Vec3(-1, 1, 0)).norm() < 1e-12);
}

TEST_CASE("FK matches the literal composition chain on random rigs")
{
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t K = 1 + rng() % 20;
        const Rig rig = random_rig(rng, K);
        const Pose pose = random_pose(rng, K);
        const auto T = forward_kinematics(rig, pose);
        const auto oracle = chain_oracle(rig, pose);
        for (std::size_t k = 0; k < K; ++k) CHECK(max_diff(T[k], oracle[k]) < 1e-6);
        for (const auto& t : T.bones) CHECK(orthonormality_error(t.R) < 1e-5);
    }
}

TEST_CASE("FK rejects a pose of the wrong size")
{
    const auto a = synth_avatar({10, 5, 5, 0});
    CHECK_THROWS_AS(forward_kinematics(a.rig, Pose::identity(4)), ArgumentError);
}

TEST_CASE("LBS: identity bones reproduce the canonical set")
{
    const auto a = synth_avatar({3000, 24, 8, 3});
    const auto posed = lbs_deform(a, forward_kinematics(a.rig, Pose::identity(24)));
    REQUIRE(posed.count() == a.gaussians.count());
    for (std::size_t i = 0; i < posed.count(); ++i) {
        const auto& p = a.gaussians.positions[i];
        CHECK(posed.positions[i] == Vec3(p[0], p[1], p[2]));
        const Mat3 diff = unpack_upper(posed.covariances[i]) - a.gaussians.covariance(i);
        CHECK(diff.cwiseAbs().maxCoeff() <= 1e-12);
    }
}

namespace {

GaussianAvatar two_bone_splat(float w0, float w1)
{
    GaussianAvatar a;
    a.gaussians.sh_degree = 0;
    a.gaussians.positions = {{0.2f, 0.3f, -0.1f}};
    a.gaussians.scales = {{0.01f, 0.02f, 0.05f}};
    a.gaussians.rotations = {{0.9f, 0.1f, 0.3f, 0.2f}};
    a.gaussians.opacities = {0.8f};
    a.gaussians.sh = {0.0f, 0.0f, 0.0f};
    a.rig.parents = {-1, 0};
    a.rig.rest_global = {{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0}, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0}};
    a.rig.names = {"a", "b"};
    std::array<Influence, kMaxInfluences> row{};
    row[0] = {0, w0};
    row[1] = {1, w1};
    if (w1 == 0.0f) row[1] = {};
    a.weights.rows = {row};
    normalize_and_validate(a);
    return a;
}

} // namespace

TEST_CASE("LBS: single translation influence moves the mean only")
{
    const auto a = two_bone_splat(1.0f, 0.0f);
    const BoneTransforms T{{Rigid::translation(Vec3(1, 0, 0)), Rigid::identity()}};
    const auto posed = lbs_deform(a, T);
    const auto& p = a.gaussians.positions[0];
    CHECK((posed.positions[0] - (Vec3(p[0], p[1], p[2]) + Vec3(1, 0, 0))).norm() < 1e-15);
    CHECK(posed.covariances[0] == pack_upper(a.gaussians.covariance(0)));
}

TEST_CASE("LBS: blended translations are linear")
{
    const auto a = two_bone_splat(0.5f, 0.5f);
    const BoneTransforms T{{Rigid::translation(Vec3(1, 0, 0)), Rigid::translation(Vec3(0, 1, 0))}};
    const auto posed = lbs_deform(a, T);
    const auto& p = a.gaussians.positions[0];
    CHECK((posed.positions[0] - (Vec3(p[0], p[1], p[2]) + Vec3(0.5, 0.5, 0))).norm() < 1e-15);
}

TEST_CASE("LBS: blended rotation is the polar factor (SVD oracle)")
{
    const auto a = two_bone_splat(0.5f, 0.5f);
    const Rigid rz = Rigid::from_quat(Quat::from_axis_angle(Vec3::UnitZ(), std::numbers::pi / 2));
    const auto posed = lbs_deform(a, BoneTransforms{{Rigid::identity(), rz}});
    const Mat3 M = 0.5 * Mat3::Identity() + 0.5 * rz.R;
    const Mat3 R = svd_polar(M);
    CHECK((posed.rotations[0] - R).cwiseAbs().maxCoeff() < 1e-6);
    // 45 degrees about z.
    const Mat3 r45 = Quat::from_axis_angle(Vec3::UnitZ(), std::numbers::pi / 4).to_matrix();
    CHECK((posed.rotations[0] - r45).cwiseAbs().maxCoeff() < 1e-12);
    const Mat3 expected = R * a.gaussians.covariance(0) * R.transpose();
    CHECK((unpack_upper(posed.covariances[0]) - expected).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("polar factor matches SVD on random well-conditioned blends")
{
    std::mt19937_64 rng(31);
    for (int i = 0; i < 200; ++i) {
        Mat3 M = Mat3::Zero();
        double wsum = 0.0;
        const int n = 2 + static_cast<int>(rng() % 4);
        const Mat3 base = random_rotation(rng);
        for (int k = 0; k < n; ++k) {
            const double w = uniform(rng, 0.1, 1.0);
            // Perturbations up to ~60 degrees keep det(M) well away from zero.
            const Mat3 R = base * Quat::from_axis_angle(random_quat(rng).to_matrix().col(0), uniform(rng, -1, 1)).to_matrix();
            M += w * R;
            wsum += w;
        }
        M /= wsum;
        const auto R = polar_rotation(M);
        REQUIRE(R.has_value());
        CHECK((*R - svd_polar(M)).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(std::abs(R->determinant() - 1.0) < 1e-6);
    }
    CHECK_FALSE(polar_rotation(Mat3::Zero()).has_value());
    CHECK_FALSE(polar_rotation(-Mat3::Identity()).has_value());
}

TEST_CASE("LBS: degenerate blend falls back to the heaviest bone")
{
    const Rigid rz = Rigid::from_quat(Quat::from_axis_angle(Vec3::UnitZ(), std::numbers::pi));
    const Rigid rx = Rigid::from_quat(Quat::from_axis_angle(Vec3::UnitX(), std::numbers::pi));
    // Unequal two-bone blends stay invertible: 0.4 I + 0.6 Rz(pi) = diag(-0.2, -0.2, 1).
    const auto unequal = lbs_deform(two_bone_splat(0.4f, 0.6f), BoneTransforms{{Rigid::identity(), rz}});
    CHECK((unequal.rotations[0] - rz.R).cwiseAbs().maxCoeff() < 1e-12);

    // Even blend: M = diag(0, 0, 1), det 0. Tie goes to the first slot.
    const auto tie = lbs_deform(two_bone_splat(0.5f, 0.5f), BoneTransforms{{rz, Rigid::identity()}});
    CHECK(tie.rotations[0] == rz.R);

    // 0.25 I + 0.25 Rz(pi) + 0.5 Rx(pi) = diag(0.5, -0.5, 0): the 0.5 bone wins.
    auto a = two_bone_splat(0.5f, 0.5f);
    a.rig.parents.push_back(0);
    a.rig.rest_global.push_back(a.rig.rest_global[0]);
    a.rig.names.push_back("c");
    a.weights.rows[0][0] = {0, 0.25f};
    a.weights.rows[0][1] = {1, 0.25f};
    a.weights.rows[0][2] = {2, 0.5f};
    normalize_and_validate(a);
    const auto three = lbs_deform(a, BoneTransforms{{Rigid::identity(), rz, rx}});
    CHECK(three.rotations[0] == rx.R);
    const Mat3 expect = rx.R * a.gaussians.covariance(0) * rx.R.transpose();
    CHECK((unpack_upper(three.covariances[0]) - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("LBS: rigid root pre-transform is equivariant")
{
    std::mt19937_64 rng(41);
    const auto a = synth_avatar({2000, 24, 9, 3});
    for (int trial = 0; trial < 5; ++trial) {
        const Pose pose = random_pose(rng, 24);
        const Rigid S{random_rotation(rng), Vec3(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2))};
        Pose moved = pose;
        const Rigid root = S * Rigid::from_quat(pose.root_rotation, pose.root_translation);
        const Eigen::Quaterniond rq(root.R);
        moved.root_rotation = {rq.w(), rq.x(), rq.y(), rq.z()};
        moved.root_translation = root.t;

        const auto base = lbs_deform(a, forward_kinematics(a.rig, pose));
        const auto out = lbs_deform(a, forward_kinematics(a.rig, moved));
        double pos_err = 0.0, cov_err = 0.0;
        for (std::size_t i = 0; i < base.count(); ++i) {
            pos_err = std::max(pos_err, (out.positions[i] - S.apply(base.positions[i])).cwiseAbs().maxCoeff());
            const Mat3 expect = S.R * unpack_upper(base.covariances[i]) * S.R.transpose();
            cov_err = std::max(cov_err, (unpack_upper(out.covariances[i]) - expect).cwiseAbs().maxCoeff());
        }
        CHECK(pos_err < 1e-9);
        CHECK(cov_err < 1e-9);
    }
}

TEST_CASE("LBS: single-influence splats keep their covariance spectrum; rotations are proper")
{
    std::mt19937_64 rng(51);
    const auto a = synth_avatar({3000, 24, 10, 0});
    const auto posed = lbs_deform(a, forward_kinematics(a.rig, random_pose(rng, 24)));
    int singles = 0;
    for (std::size_t i = 0; i < posed.count(); ++i) {
        CHECK(std::abs(posed.rotations[i].determinant() - 1.0) < 1e-6);
        const Eigen::SelfAdjointEigenSolver<Mat3> after(unpack_upper(posed.covariances[i]));
        CHECK(after.eigenvalues().minCoeff() >= -1e-8);
        int influences = 0;
        for (const auto& inf : a.weights.rows[i]) influences += inf.bone != kNoBone && inf.weight > 0.0f;
        if (influences != 1) continue;
        ++singles;
        const Eigen::SelfAdjointEigenSolver<Mat3> before(a.gaussians.covariance(i));
        CHECK((after.eigenvalues() - before.eigenvalues()).cwiseAbs().maxCoeff() < 1e-9);
    }
    CHECK(singles > 0);
}

TEST_CASE("LBS: parallel and serial results are bit-identical for any thread count")
{
    std::mt19937_64 rng(61);
    const auto a = synth_avatar({5000, 24, 11, 3});
    const auto bones = forward_kinematics(a.rig, random_pose(rng, 24));
    const auto serial = lbs_deform_serial(a, bones);
    for (int threads : {1, 4}) {
        const auto par = with_threads(threads, [&] { return lbs_deform(a, bones); });
        CHECK(par.positions == serial.positions);
        CHECK(par.covariances == serial.covariances);
        CHECK(par.rotations == serial.rotations);
    }
}
