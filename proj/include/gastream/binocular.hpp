#pragma once

#include "gastream/camera.hpp"
#include "gastream/rasterizer.hpp"
#include "gastream/skinning.hpp"

#include <memory>

namespace gastream {

enum class StereoMode { batched, sequential };

struct StereoRenderJob {
    const PosedGaussians* posed = nullptr;
    StereoCameraPair cameras;
    Rgb background{0.0f, 0.0f, 0.0f};
    StereoMode mode = StereoMode::batched;
    RenderOptions options;
};

struct StereoFrame {
    FrameBuffer left;
    FrameBuffer right;
    int staging_passes = 0; // how many times posed attributes were packed for rasterization
};

// Binocular Batching: posed attributes are staged once; projection, shading, sorting,
// binning and compositing for both eyes run inside a single parallel region over the
// shared buffer. View-rotation work and the depth sort are shared when both eyes have
// the same rotation (always true for eye_extrinsics output).
//
// The renderer keeps its staging buffer, per-eye workspaces and output frames between
// calls, so a long-lived instance pays allocation and first-touch costs once.
class StereoRenderer {
public:
    StereoRenderer();
    ~StereoRenderer();
    StereoRenderer(StereoRenderer&&) noexcept;
    StereoRenderer& operator=(StereoRenderer&&) noexcept;

    // Batched render; the returned frame is owned by the renderer and valid until
    // the next call.
    const StereoFrame& render(const StereoRenderJob& job);

    StereoFrame release_frame() { return std::move(frame_); }

private:
    struct Scratch;
    std::unique_ptr<Scratch> scratch_;
    StereoFrame frame_;
};

StereoFrame render_stereo_batched(const StereoRenderJob& job);

// Baseline: two independent render() calls, each re-staging the posed attributes.
StereoFrame render_stereo_sequential(const StereoRenderJob& job);

StereoFrame render_stereo(const StereoRenderJob& job);

} // namespace gastream
