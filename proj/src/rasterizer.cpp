#include "gastream/rasterizer.hpp"

#include "gastream/raster_pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace gastream {

namespace pipeline {

namespace {
thread_local std::uint64_t stage_calls = 0;
}

std::uint64_t staging_count()
{
    return stage_calls;
}

StagedSplats stage(const PosedGaussians& posed)
{
    StagedSplats out;
    stage_into(posed, out);
    return out;
}

void stage_into(const PosedGaussians& posed, StagedSplats& out)
{
    ++stage_calls;
    out.sh_degree = posed.sh_degree;
    out.splats.resize(posed.count());
    for (std::size_t i = 0; i < posed.count(); ++i) {
        auto& s = out.splats[i];
        const Vec3& p = posed.positions[i];
        s.position[0] = p.x();
        s.position[1] = p.y();
        s.position[2] = p.z();
        std::copy(posed.covariances[i].begin(), posed.covariances[i].end(), s.covariance);
        const Mat3& R = posed.rotations[i];
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) s.rotation[r * 3 + c] = R(r, c);
        s.opacity = posed.opacities[i];
    }
    out.sh.assign(posed.sh.begin(), posed.sh.end());
}

EyeView make_eye_view(const Rigid& world_to_camera)
{
    return {world_to_camera, camera_center(world_to_camera)};
}

ViewSpaceGaussian view_space(const StagedSplats& staged, std::size_t i, const Mat3& W)
{
    const auto& s = staged.splats[i];
    Cov6 cov;
    std::copy(std::begin(s.covariance), std::end(s.covariance), cov.begin());
    return rotate_to_view(Vec3(s.position[0], s.position[1], s.position[2]), cov, W);
}

Fragment make_fragment(const StagedSplats& staged, std::size_t i, const ViewSpaceGaussian& vs, const EyeView& eye,
                       const Intrinsics& K)
{
    Fragment f;
    const auto proj = finish_projection(vs, eye.world_to_camera.t, K);
    if (!proj) return f;
    const double a = proj->cov_uu, b = proj->cov_uv, c = proj->cov_vv;
    const double det = a * c - b * b;
    if (!(det > 0.0)) return f;

    const auto& s = staged.splats[i];
    f.in_depth_range = true;
    f.depth = proj->depth;
    f.u = static_cast<float>(proj->u);
    f.v = static_cast<float>(proj->v);
    f.conic_a = static_cast<float>(c / det);
    f.conic_b = static_cast<float>(-b / det);
    f.conic_c = static_cast<float>(a / det);
    f.opacity = s.opacity;

    // Beyond sqrt(2 ln(255 rho) * lambda_max) the splat's alpha is below kAlphaMin;
    // never bin tighter than 3 sigma. One pixel of slack absorbs float rounding.
    const double mid = 0.5 * (a + c);
    const double lambda_max = mid + std::sqrt(std::max(0.1, mid * mid - det));
    double k = 3.0;
    if (s.opacity > kAlphaMin) k = std::max(k, std::sqrt(2.0 * std::log(double(s.opacity) / double(kAlphaMin))));
    const double radius = k * std::sqrt(lambda_max) + 1.0;
    const double w = K.width, h = K.height;
    const double lx = std::clamp(std::floor(proj->u - radius), -1.0, w);
    const double hx = std::clamp(std::floor(proj->u + radius), -1.0, w);
    const double ly = std::clamp(std::floor(proj->v - radius), -1.0, h);
    const double hy = std::clamp(std::floor(proj->v + radius), -1.0, h);
    f.x0 = std::max(0, static_cast<int>(lx));
    f.x1 = std::min(K.width - 1, static_cast<int>(hx));
    f.y0 = std::max(0, static_cast<int>(ly));
    f.y1 = std::min(K.height - 1, static_cast<int>(hy));
    f.on_screen = s.opacity >= kAlphaMin && f.x0 <= f.x1 && f.y0 <= f.y1;

    // SH is evaluated in the splat's own frame so appearance rides along with the body.
    const Vec3 p(s.position[0], s.position[1], s.position[2]);
    Vec3 dir = p - eye.center;
    const double len = dir.norm();
    dir = len > 0.0 ? Vec3(dir / len) : Vec3(0.0, 0.0, 1.0);
    const Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> R(s.rotation);
    const Vec3 local = R.transpose() * dir;
    f.color = sh_evaluate(staged.sh_degree, staged.sh_of(i), local);
    return f;
}

void write_pixel(FrameBuffer& fb, int x, int y, const PixelState& s, const Rgb& background)
{
    const std::size_t p = static_cast<std::size_t>(y) * fb.width + x;
    fb.rgb[p * 3 + 0] = s.r + background[0] * s.transmittance;
    fb.rgb[p * 3 + 1] = s.g + background[1] * s.transmittance;
    fb.rgb[p * 3 + 2] = s.b + background[2] * s.transmittance;
    fb.transmittance[p] = s.transmittance;
}

void sort_by_depth(EyeWorkspace& ws)
{
    const auto& frags = ws.fragments;
    ws.order.clear();
    for (std::size_t i = 0; i < frags.size(); ++i) {
        if (frags[i].on_screen) ws.order.push_back(static_cast<std::uint32_t>(i));
    }
    std::sort(ws.order.begin(), ws.order.end(), [&](std::uint32_t l, std::uint32_t r) {
        const double dl = frags[l].depth, dr = frags[r].depth;
        return dl < dr || (dl == dr && l < r);
    });
}

bool is_depth_ordered(const std::vector<Fragment>& fragments, const std::vector<std::uint32_t>& order)
{
    for (std::size_t k = 1; k < order.size(); ++k) {
        const double a = fragments[order[k - 1]].depth, b = fragments[order[k]].depth;
        if (!(a < b || (a == b && order[k - 1] < order[k]))) return false;
    }
    return true;
}

void sort_and_bin(EyeWorkspace& ws, const Intrinsics& K)
{
    sort_by_depth(ws);
    bin_tiles(ws, K);
}

void bin_tiles(EyeWorkspace& ws, const Intrinsics& K)
{
    const auto& frags = ws.fragments;
    ws.tiles_x = (K.width + kTileSize - 1) / kTileSize;
    ws.tiles_y = (K.height + kTileSize - 1) / kTileSize;
    ws.tile_offsets.assign(static_cast<std::size_t>(ws.tile_count()) + 1, 0);
    for (auto idx : ws.order) {
        const auto& f = frags[idx];
        for (int ty = f.y0 / kTileSize; ty <= f.y1 / kTileSize; ++ty)
            for (int tx = f.x0 / kTileSize; tx <= f.x1 / kTileSize; ++tx) ++ws.tile_offsets[ty * ws.tiles_x + tx + 1];
    }
    for (std::size_t t = 1; t < ws.tile_offsets.size(); ++t) ws.tile_offsets[t] += ws.tile_offsets[t - 1];
    ws.tile_entries.resize(ws.tile_offsets.back());
    std::vector<std::uint32_t> cursor(ws.tile_offsets.begin(), ws.tile_offsets.end() - 1);
    for (auto idx : ws.order) {
        const auto& f = frags[idx];
        for (int ty = f.y0 / kTileSize; ty <= f.y1 / kTileSize; ++ty)
            for (int tx = f.x0 / kTileSize; tx <= f.x1 / kTileSize; ++tx)
                ws.tile_entries[cursor[ty * ws.tiles_x + tx]++] = idx;
    }
}

void rasterize_tile(const EyeWorkspace& ws, int tile, const Rgb& background, const RenderOptions& options,
                    FrameBuffer& fb)
{
    const int tx = tile % ws.tiles_x;
    const int ty = tile / ws.tiles_x;
    const int px0 = tx * kTileSize, py0 = ty * kTileSize;
    const int px1 = std::min(fb.width, px0 + kTileSize), py1 = std::min(fb.height, py0 + kTileSize);
    const int tile_w = px1 - px0;

    std::array<PixelState, kTileSize * kTileSize> state{};
    std::array<bool, kTileSize * kTileSize> done{};
    int live = tile_w * (py1 - py0);

    const auto begin = ws.tile_entries.begin() + ws.tile_offsets[tile];
    const auto end = ws.tile_entries.begin() + ws.tile_offsets[tile + 1];
    for (auto it = begin; it != end && live > 0; ++it) {
        const Fragment& f = ws.fragments[*it];
        const int xa = std::max(px0, f.x0), xb = std::min(px1 - 1, f.x1);
        const int ya = std::max(py0, f.y0), yb = std::min(py1 - 1, f.y1);
        for (int y = ya; y <= yb; ++y) {
            for (int x = xa; x <= xb; ++x) {
                const int local = (y - py0) * tile_w + (x - px0);
                if (done[local]) continue;
                const float alpha = splat_alpha(f, x, y);
                if (alpha < kAlphaMin) continue;
                auto& s = state[local];
                s.blend(f.color, alpha);
                if (options.early_termination && s.saturated()) {
                    done[local] = true;
                    --live;
                }
            }
        }
    }
    for (int y = py0; y < py1; ++y)
        for (int x = px0; x < px1; ++x) write_pixel(fb, x, y, state[(y - py0) * tile_w + (x - px0)], background);
}

} // namespace pipeline

FrameBuffer render(const PosedGaussians& posed, const Rigid& world_to_camera, const Intrinsics& K, const Rgb& background,
                   const RenderOptions& options)
{
    using namespace pipeline;
    validate(K);
    const StagedSplats staged = stage(posed);
    const EyeView eye = make_eye_view(world_to_camera);

    EyeWorkspace ws;
    ws.fragments.resize(staged.count());
    const auto n = static_cast<std::ptrdiff_t>(staged.count());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        ws.fragments[idx] = make_fragment(staged, idx, view_space(staged, idx, eye.world_to_camera.R), eye, K);
    }
    sort_and_bin(ws, K);

    FrameBuffer fb(K.width, K.height);
    const int tiles = ws.tile_count();
#pragma omp parallel for schedule(dynamic, 4)
    for (int t = 0; t < tiles; ++t) rasterize_tile(ws, t, background, options, fb);
    return fb;
}

FrameBuffer render_bruteforce(const PosedGaussians& posed, const Rigid& world_to_camera, const Intrinsics& K,
                              const Rgb& background, const RenderOptions& options)
{
    using namespace pipeline;
    validate(K);
    const StagedSplats staged = stage(posed);
    const EyeView eye = make_eye_view(world_to_camera);

    std::vector<Fragment> frags(staged.count());
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < staged.count(); ++i) {
        frags[i] = make_fragment(staged, i, view_space(staged, i, eye.world_to_camera.R), eye, K);
        if (frags[i].in_depth_range) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return frags[l].depth < frags[r].depth; });

    FrameBuffer fb(K.width, K.height);
    for (int y = 0; y < K.height; ++y) {
        for (int x = 0; x < K.width; ++x) {
            PixelState s;
            for (std::size_t idx : order) {
                const float alpha = splat_alpha(frags[idx], x, y);
                if (alpha < kAlphaMin) continue;
                if (options.early_termination && s.saturated()) continue;
                s.blend(frags[idx].color, alpha);
            }
            write_pixel(fb, x, y, s, background);
        }
    }
    return fb;
}

} // namespace gastream
