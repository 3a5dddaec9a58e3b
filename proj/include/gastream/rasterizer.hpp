#pragma once

#include "gastream/camera.hpp"
#include "gastream/sh.hpp"
#include "gastream/skinning.hpp"

#include <cstdint>
#include <vector>

namespace gastream {

inline constexpr int kTileSize = 16;
inline constexpr float kAlphaMax = 0.99f;
inline constexpr float kAlphaMin = 1.0f / 255.0f;
inline constexpr float kTransmittanceCutoff = 1e-4f;

// Linear-light RGB accumulators plus the final transmittance of every pixel.
struct FrameBuffer {
    int width = 0;
    int height = 0;
    std::vector<float> rgb;           // interleaved, row-major
    std::vector<float> transmittance; // 1 = nothing drawn

    FrameBuffer() = default;
    FrameBuffer(int w, int h)
        : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0.0f),
          transmittance(static_cast<std::size_t>(w) * h, 1.0f)
    {
    }

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    Rgb pixel(int x, int y) const
    {
        const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
        return {rgb[i], rgb[i + 1], rgb[i + 2]};
    }
    float alpha(int x, int y) const { return 1.0f - transmittance[static_cast<std::size_t>(y) * width + x]; }

    friend bool operator==(const FrameBuffer&, const FrameBuffer&) = default;
};

struct RenderOptions {
    // Stop compositing a pixel once its transmittance drops below kTransmittanceCutoff.
    // The brute-force renderer applies the same cutoff as a contribution mask.
    bool early_termination = true;
};

// Tiled renderer: project, cull, shade, globally depth-sort, bin into 16x16 tiles and
// composite front to back, in parallel over tiles. Bit-identical for any thread count.
FrameBuffer render(const PosedGaussians& posed, const Rigid& world_to_camera, const Intrinsics& K, const Rgb& background,
                   const RenderOptions& options = {});

// Serial reference with the same compositing contract: no tiles, no extent culling,
// every splat evaluated at every pixel in full depth order.
FrameBuffer render_bruteforce(const PosedGaussians& posed, const Rigid& world_to_camera, const Intrinsics& K,
                              const Rgb& background, const RenderOptions& options = {});

} // namespace gastream
