#pragma once

#include "gastream/image_io.hpp"
#include "gastream/rasterizer.hpp"

#include <filesystem>
#include <limits>
#include <vector>

namespace gastream {

// Interleaved channels normalized to [0, 1].
struct ImageF {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<double> data;

    double at(int x, int y, int c) const
    {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

ImageF normalized(const Image8& image);
ImageF from_framebuffer(const FrameBuffer& fb);

inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

struct MetricReport {
    double l1 = 0.0;
    double psnr = kPsnrIdentical;
    double ssim = 1.0;
};

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double peak = 1.0;
};

double l1_distance(const ImageF& a, const ImageF& b);
// Peak 1.0. Identical inputs give kPsnrIdentical.
double psnr(const ImageF& a, const ImageF& b);
// Gaussian-window SSIM per channel, averaged. Windows are clipped at the image border
// and their weights renormalized over the pixels that remain.
double ssim(const ImageF& a, const ImageF& b, const SsimParams& params = {});

MetricReport compare(const ImageF& a, const ImageF& b);
MetricReport compare_images(const std::filesystem::path& a, const std::filesystem::path& b);

} // namespace gastream
