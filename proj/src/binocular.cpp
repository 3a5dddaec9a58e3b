#include "gastream/binocular.hpp"

#include "gastream/errors.hpp"
#include "gastream/raster_pipeline.hpp"

#include <algorithm>

namespace gastream {

namespace {

using namespace pipeline;

const PosedGaussians& posed_of(const StereoRenderJob& job)
{
    if (job.posed == nullptr) throw ArgumentError("stereo job has no posed splats");
    return *job.posed;
}

// Both eyes of a head share the view rotation, so their depths differ from the common
// rotated depth by one per-eye constant. Sorting once by the rotated depth therefore
// orders both eyes, except where adding the constant rounds two keys into a tie whose
// index order disagrees; each eye's filtered list is verified and re-sorted if so.
void order_both_eyes(std::array<EyeWorkspace, 2>& ws, const std::vector<double>& rotated_depth)
{
    std::vector<std::uint32_t> shared;
    shared.reserve(rotated_depth.size());
    for (std::size_t i = 0; i < rotated_depth.size(); ++i) {
        if (ws[0].fragments[i].on_screen || ws[1].fragments[i].on_screen) shared.push_back(static_cast<std::uint32_t>(i));
    }
    std::sort(shared.begin(), shared.end(), [&](std::uint32_t l, std::uint32_t r) {
        const double dl = rotated_depth[l], dr = rotated_depth[r];
        return dl < dr || (dl == dr && l < r);
    });
    for (auto& eye : ws) {
        eye.order.clear();
        for (auto idx : shared) {
            if (eye.fragments[idx].on_screen) eye.order.push_back(idx);
        }
        if (!is_depth_ordered(eye.fragments, eye.order)) sort_by_depth(eye);
    }
}

} // namespace

struct StereoRenderer::Scratch {
    StagedSplats staged;
    std::array<EyeWorkspace, 2> ws;
    std::vector<double> rotated_depth;
};

StereoRenderer::StereoRenderer() : scratch_(std::make_unique<Scratch>()) {}
StereoRenderer::~StereoRenderer() = default;
StereoRenderer::StereoRenderer(StereoRenderer&&) noexcept = default;
StereoRenderer& StereoRenderer::operator=(StereoRenderer&&) noexcept = default;

const StereoFrame& StereoRenderer::render(const StereoRenderJob& job)
{
    const PosedGaussians& posed = posed_of(job);
    const Intrinsics& K = job.cameras.intrinsics;
    validate(K);

    const auto staged_before = staging_count();
    auto& staged = scratch_->staged;
    auto& ws = scratch_->ws;
    auto& rotated_depth = scratch_->rotated_depth;
    stage_into(posed, staged);

    const std::array<EyeView, 2> eyes = {make_eye_view(job.cameras.world_to_camera_left),
                                         make_eye_view(job.cameras.world_to_camera_right)};
    const bool shared_rotation = eyes[0].world_to_camera.R == eyes[1].world_to_camera.R;

    ws[0].fragments.resize(staged.count());
    ws[1].fragments.resize(staged.count());
    rotated_depth.resize(shared_rotation ? staged.count() : 0);
    // Every pixel is rewritten by its tile, so existing buffers need no clearing.
    for (FrameBuffer* fb : {&frame_.left, &frame_.right}) {
        if (fb->width != K.width || fb->height != K.height) *fb = FrameBuffer(K.width, K.height);
    }
    const std::array<FrameBuffer*, 2> targets = {&frame_.left, &frame_.right};

    const auto n = static_cast<std::ptrdiff_t>(staged.count());
#pragma omp parallel
    {
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            const ViewSpaceGaussian vs = view_space(staged, idx, eyes[0].world_to_camera.R);
            ws[0].fragments[idx] = make_fragment(staged, idx, vs, eyes[0], K);
            if (shared_rotation) {
                ws[1].fragments[idx] = make_fragment(staged, idx, vs, eyes[1], K);
                rotated_depth[idx] = vs.rotated_mean.z();
            } else {
                ws[1].fragments[idx] =
                    make_fragment(staged, idx, view_space(staged, idx, eyes[1].world_to_camera.R), eyes[1], K);
            }
        }

#pragma omp single
        {
            if (shared_rotation) {
                order_both_eyes(ws, rotated_depth);
            } else {
#pragma omp task
                sort_by_depth(ws[0]);
#pragma omp task
                sort_by_depth(ws[1]);
#pragma omp taskwait
            }
#pragma omp task
            bin_tiles(ws[0], K);
#pragma omp task
            bin_tiles(ws[1], K);
        }

        const int tiles = ws[0].tile_count();
#pragma omp for schedule(dynamic, 4)
        for (int t = 0; t < 2 * tiles; ++t) {
            const int eye = t / tiles;
            rasterize_tile(ws[eye], t % tiles, job.background, job.options, *targets[eye]);
        }
    }
    frame_.staging_passes = static_cast<int>(staging_count() - staged_before);
    return frame_;
}

StereoFrame render_stereo_batched(const StereoRenderJob& job)
{
    StereoRenderer renderer;
    renderer.render(job);
    return renderer.release_frame();
}

StereoFrame render_stereo_sequential(const StereoRenderJob& job)
{
    const PosedGaussians& posed = posed_of(job);
    StereoFrame out;
    const auto staged_before = staging_count();
    out.left = render(posed, job.cameras.world_to_camera_left, job.cameras.intrinsics, job.background, job.options);
    out.right = render(posed, job.cameras.world_to_camera_right, job.cameras.intrinsics, job.background, job.options);
    out.staging_passes = static_cast<int>(staging_count() - staged_before);
    return out;
}

StereoFrame render_stereo(const StereoRenderJob& job)
{
    return job.mode == StereoMode::batched ? render_stereo_batched(job) : render_stereo_sequential(job);
}

} // namespace gastream
