#pragma once

// Stages of the tiled renderer, exposed so the stereo scheduler can fuse the two
// eyes' passes over one staged buffer. Most callers want rasterizer.hpp instead.

#include "gastream/rasterizer.hpp"

#include <cmath>
#include <span>

namespace gastream::pipeline {

// Posed attributes packed into the layout the per-eye passes read.
struct StagedSplat {
    double position[3];
    double covariance[6];
    double rotation[9]; // row-major blended rotation
    float opacity;
};

struct StagedSplats {
    int sh_degree = 0;
    std::vector<StagedSplat> splats;
    std::vector<float> sh;

    std::size_t count() const { return splats.size(); }
    std::span<const float> sh_of(std::size_t i) const
    {
        const std::size_t n = static_cast<std::size_t>(sh_coeff_count(sh_degree)) * 3;
        return {sh.data() + i * n, n};
    }
};

StagedSplats stage(const PosedGaussians& posed);

// Same as stage() but reuses the storage already held by `out`.
void stage_into(const PosedGaussians& posed, StagedSplats& out);

// Number of stage() calls made on the calling thread so far.
std::uint64_t staging_count();

// Screen-space splat for one eye.
struct Fragment {
    float u = 0.0f;
    float v = 0.0f;
    float conic_a = 0.0f; // inverse screen covariance: [a b; b c]
    float conic_b = 0.0f;
    float conic_c = 0.0f;
    float opacity = 0.0f;
    Rgb color{};
    double depth = 0.0;
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1; // inclusive pixel bounds of the splat's extent
    bool in_depth_range = false;          // passed near/far culling
    bool on_screen = false;               // extent overlaps the image and opacity can reach kAlphaMin
};

struct EyeView {
    Rigid world_to_camera;
    Vec3 center;
};

EyeView make_eye_view(const Rigid& world_to_camera);

ViewSpaceGaussian view_space(const StagedSplats& staged, std::size_t i, const Mat3& W);

Fragment make_fragment(const StagedSplats& staged, std::size_t i, const ViewSpaceGaussian& vs, const EyeView& eye,
                       const Intrinsics& K);

inline float splat_alpha(const Fragment& f, int px, int py)
{
    const float dx = f.u - (static_cast<float>(px) + 0.5f);
    const float dy = f.v - (static_cast<float>(py) + 0.5f);
    const float power = -0.5f * (f.conic_a * dx * dx + f.conic_c * dy * dy) - f.conic_b * dx * dy;
    const float a = f.opacity * std::exp(power);
    return a < kAlphaMax ? a : kAlphaMax;
}

// Per-pixel front-to-back accumulator.
struct PixelState {
    float r = 0.0f, g = 0.0f, b = 0.0f;
    float transmittance = 1.0f;

    void blend(const Rgb& color, float alpha)
    {
        const float w = alpha * transmittance;
        r += color[0] * w;
        g += color[1] * w;
        b += color[2] * w;
        transmittance *= 1.0f - alpha;
    }
    bool saturated() const { return transmittance < kTransmittanceCutoff; }
};

void write_pixel(FrameBuffer& fb, int x, int y, const PixelState& s, const Rgb& background);

struct EyeWorkspace {
    std::vector<Fragment> fragments;
    std::vector<std::uint32_t> order;        // on-screen splats, (depth, index) ascending
    std::vector<std::uint32_t> tile_offsets; // tiles + 1
    std::vector<std::uint32_t> tile_entries; // splat indices per tile in depth order
    int tiles_x = 0;
    int tiles_y = 0;

    int tile_count() const { return tiles_x * tiles_y; }
};

// Global (depth, index) sort of on-screen fragments followed by a stable bucket pass
// into tiles, so every tile list inherits the global order.
void sort_and_bin(EyeWorkspace& ws, const Intrinsics& K);

void sort_by_depth(EyeWorkspace& ws);

// True when `order` is strictly ascending in (depth, index).
bool is_depth_ordered(const std::vector<Fragment>& fragments, const std::vector<std::uint32_t>& order);

// Buckets ws.order into per-tile lists.
void bin_tiles(EyeWorkspace& ws, const Intrinsics& K);

void rasterize_tile(const EyeWorkspace& ws, int tile, const Rgb& background, const RenderOptions& options,
                    FrameBuffer& fb);

} // namespace gastream::pipeline
