#include "gastream/session.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace testing;

namespace {

StereoRenderJob job_for(const PosedGaussians& posed, const HeadPose& head, double ipd, int w, int h)
{
    StereoRenderJob job;
    job.posed = &posed;
    job.cameras = eye_extrinsics(head, ipd);
    job.cameras.intrinsics = intrinsics_from_fov(65.0, w, h);
    return job;
}

HeadPose random_head(std::mt19937_64& rng)
{
    // Looks roughly down +Z at the random scenes.
    const Quat wobble = Quat::from_axis_angle(Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)),
                                              uniform(rng, -0.2, 0.2));
    return {Rigid::from_quat(wobble, Vec3(uniform(rng, -0.1, 0.1), uniform(rng, -0.1, 0.1), uniform(rng, -0.3, 0.3)))};
}

} // namespace

TEST_CASE("batched and sequential stereo are bit-identical")
{
    std::mt19937_64 rng(81);
    StereoRenderer renderer;
    for (int scene = 0; scene < 20; ++scene) {
        const auto posed = random_scene(rng, 1 + rng() % 400, static_cast<int>(rng() % 4));
        auto job = job_for(posed, random_head(rng), uniform(rng, 0.03, 0.08), 48 + int(rng() % 40), 40 + int(rng() % 40));
        const auto seq = render_stereo_sequential(job);
        const auto bat = render_stereo_batched(job);
        CHECK(bat.left == seq.left);
        CHECK(bat.right == seq.right);
        // The persistent renderer matches too, across changing sizes.
        const auto& reused = renderer.render(job);
        CHECK(reused.left == seq.left);
        CHECK(reused.right == seq.right);
        // And each eye matches an independent render() call.
        CHECK(seq.left == render(posed, job.cameras.world_to_camera_left, job.cameras.intrinsics, job.background));
    }
}

TEST_CASE("eyes with different rotations still match per-eye renders")
{
    std::mt19937_64 rng(82);
    const auto posed = random_scene(rng, 300, 3);
    StereoRenderJob job;
    job.posed = &posed;
    job.cameras.intrinsics = intrinsics_from_fov(65.0, 64, 64);
    job.cameras.world_to_camera_left = Rigid::from_quat(Quat::from_axis_angle(Vec3::UnitY(), 0.05));
    job.cameras.world_to_camera_right = Rigid::from_quat(Quat::from_axis_angle(Vec3::UnitY(), -0.05));
    const auto bat = render_stereo_batched(job);
    const auto seq = render_stereo_sequential(job);
    CHECK(bat.left == seq.left);
    CHECK(bat.right == seq.right);
}

TEST_CASE("zero baseline gives identical eyes")
{
    std::mt19937_64 rng(83);
    const auto posed = random_scene(rng, 200, 3);
    StereoRenderJob job;
    job.posed = &posed;
    job.cameras.intrinsics = intrinsics_from_fov(65.0, 64, 64);
    job.cameras.world_to_camera_left = job.cameras.world_to_camera_right = Rigid::translation(Vec3(0.01, 0, 0));
    const auto out = render_stereo_batched(job);
    CHECK(out.left == out.right);
}

TEST_CASE("staging runs once per batched frame and twice per sequential frame")
{
    std::mt19937_64 rng(84);
    const auto posed = random_scene(rng, 100, 1);
    const auto job = job_for(posed, {Rigid::identity()}, 0.055, 32, 32);
    CHECK(render_stereo_batched(job).staging_passes == 1);
    CHECK(render_stereo_sequential(job).staging_passes == 2);
    StereoRenderer renderer;
    for (int i = 0; i < 3; ++i) CHECK(renderer.render(job).staging_passes == 1);
    const auto before = pipeline::staging_count();
    render_stereo_batched(job);
    CHECK(pipeline::staging_count() - before == 1);
}

TEST_CASE("zero splats: both eyes are background in both modes")
{
    const PosedGaussians empty;
    auto job = job_for(empty, {Rigid::identity()}, 0.055, 40, 24);
    job.background = {0.25f, 0.0f, 1.0f};
    for (StereoMode mode : {StereoMode::batched, StereoMode::sequential}) {
        job.mode = mode;
        const auto out = render_stereo(job);
        for (const FrameBuffer* fb : {&out.left, &out.right})
            for (int y = 0; y < 24; ++y)
                for (int x = 0; x < 40; ++x) CHECK(fb->pixel(x, y) == job.background);
    }
}

TEST_CASE("batched stereo is bit-identical across thread counts")
{
    const auto avatar = synth_avatar({8000, 24, 5, 3});
    const auto posed = rest_pose(avatar);
    auto job = job_for(posed, default_head(), 0.055, 128, 128);
    const auto one = with_threads(1, [&] { return render_stereo_batched(job); });
    const auto many = with_threads(4, [&] { return render_stereo_batched(job); });
    CHECK(one.left == many.left);
    CHECK(one.right == many.right);
}

TEST_CASE("a job without splats is an argument error")
{
    StereoRenderJob job;
    job.cameras = eye_extrinsics({Rigid::identity()}, 0.055);
    job.cameras.intrinsics = intrinsics_from_fov(65.0, 8, 8);
    CHECK_THROWS(render_stereo_batched(job));
}
