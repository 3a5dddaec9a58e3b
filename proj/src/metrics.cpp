#include "gastream/metrics.hpp"

#include "gastream/errors.hpp"

#include <cmath>

namespace gastream {

namespace {

void require_same_shape(const ImageF& a, const ImageF& b)
{
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw ArgumentError("image dimensions differ");
    if (a.width <= 0 || a.height <= 0) throw ArgumentError("images are empty");
}

std::vector<double> gaussian_kernel(int size, double sigma)
{
    std::vector<double> k(static_cast<std::size_t>(size));
    const int r = size / 2;
    for (int i = 0; i < size; ++i) k[i] = std::exp(-0.5 * (i - r) * (i - r) / (sigma * sigma));
    return k;
}

// Weighted local mean of a single plane, border-clipped and renormalized. Separable:
// a clipped window is a rectangle, so its weight sum factors into row and column sums.
std::vector<double> local_mean(const std::vector<double>& plane, int w, int h, const std::vector<double>& k)
{
    const int r = static_cast<int>(k.size()) / 2;
    std::vector<double> tmp(plane.size()), out(plane.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0, ws = 0.0;
            for (int d = -r; d <= r; ++d) {
                const int xx = x + d;
                if (xx < 0 || xx >= w) continue;
                s += k[d + r] * plane[static_cast<std::size_t>(y) * w + xx];
                ws += k[d + r];
            }
            tmp[static_cast<std::size_t>(y) * w + x] = s / ws;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0, ws = 0.0;
            for (int d = -r; d <= r; ++d) {
                const int yy = y + d;
                if (yy < 0 || yy >= h) continue;
                s += k[d + r] * tmp[static_cast<std::size_t>(yy) * w + x];
                ws += k[d + r];
            }
            out[static_cast<std::size_t>(y) * w + x] = s / ws;
        }
    }
    return out;
}

} // namespace

ImageF normalized(const Image8& image)
{
    ImageF out{image.width, image.height, image.channels, {}};
    out.data.resize(image.data.size());
    for (std::size_t i = 0; i < image.data.size(); ++i) out.data[i] = image.data[i] / 255.0;
    return out;
}

ImageF from_framebuffer(const FrameBuffer& fb)
{
    ImageF out{fb.width, fb.height, 3, {}};
    out.data.assign(fb.rgb.begin(), fb.rgb.end());
    return out;
}

double l1_distance(const ImageF& a, const ImageF& b)
{
    require_same_shape(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
    return s / static_cast<double>(a.data.size());
}

double psnr(const ImageF& a, const ImageF& b)
{
    require_same_shape(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    if (s == 0.0) return kPsnrIdentical;
    return 10.0 * std::log10(1.0 / (s / static_cast<double>(a.data.size())));
}

double ssim(const ImageF& a, const ImageF& b, const SsimParams& params)
{
    require_same_shape(a, b);
    if (params.window < 1 || params.window % 2 == 0) throw ArgumentError("ssim window must be odd");
    const auto k = gaussian_kernel(params.window, params.sigma);
    const double c1 = (params.k1 * params.peak) * (params.k1 * params.peak);
    const double c2 = (params.k2 * params.peak) * (params.k2 * params.peak);
    const int w = a.width, h = a.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;

    double total = 0.0;
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (int c = 0; c < a.channels; ++c) {
        for (std::size_t p = 0; p < n; ++p) {
            x[p] = a.data[p * a.channels + c];
            y[p] = b.data[p * a.channels + c];
            xx[p] = x[p] * x[p];
            yy[p] = y[p] * y[p];
            xy[p] = x[p] * y[p];
        }
        const auto mx = local_mean(x, w, h, k), my = local_mean(y, w, h, k);
        const auto exx = local_mean(xx, w, h, k), eyy = local_mean(yy, w, h, k), exy = local_mean(xy, w, h, k);
        double sum = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            const double vx = exx[p] - mx[p] * mx[p];
            const double vy = eyy[p] - my[p] * my[p];
            const double cxy = exy[p] - mx[p] * my[p];
            sum += ((2.0 * mx[p] * my[p] + c1) * (2.0 * cxy + c2)) /
                   ((mx[p] * mx[p] + my[p] * my[p] + c1) * (vx + vy + c2));
        }
        total += sum / static_cast<double>(n);
    }
    return total / a.channels;
}

MetricReport compare(const ImageF& a, const ImageF& b)
{
    return {l1_distance(a, b), psnr(a, b), ssim(a, b)};
}

MetricReport compare_images(const std::filesystem::path& a, const std::filesystem::path& b)
{
    return compare(normalized(read_image(a)), normalized(read_image(b)));
}

} // namespace gastream
