#pragma once

#include "gastream/rasterizer.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace gastream {

// 8-bit interleaved image, 3 (RGB) or 4 (RGBA) channels.
struct Image8 {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<std::uint8_t> data;

    friend bool operator==(const Image8&, const Image8&) = default;
};

// IEC 61966-2-1 transfer function, rounded to 8 bits.
std::uint8_t linear_to_srgb8(float linear);

// Framebuffer -> 8-bit sRGB; the optional alpha channel is coverage (1 - T), linear.
Image8 to_srgb8(const FrameBuffer& fb, bool with_alpha = false);

// Baseline JPEG, RGB only. 4:2:0 chroma below quality 90, 4:4:4 from 90 up.
std::vector<std::uint8_t> encode_jpeg(const Image8& image, int quality);
Image8 decode_jpeg(std::span<const std::uint8_t> bytes);

void write_png(const std::filesystem::path& path, const Image8& image);

// Reads PNG or JPEG, chosen by file signature. PNG alpha is kept.
Image8 read_image(const std::filesystem::path& path);

} // namespace gastream
