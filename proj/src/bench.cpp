#include "gastream/bench.hpp"

#include "gastream/errors.hpp"
#include "gastream/image_io.hpp"
#include "gastream/session.hpp"
#include "gastream/skinning.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <map>

namespace gastream {

namespace {

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void fnv(std::uint64_t& h, const void* data, std::size_t bytes)
{
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
}

} // namespace

std::string mode_label(StereoMode mode)
{
    return mode == StereoMode::batched ? "w/ BB" : "w/o BB";
}

StereoMode parse_mode(const std::string& name)
{
    if (name == "batched" || name == "on") return StereoMode::batched;
    if (name == "sequential" || name == "off") return StereoMode::sequential;
    throw ArgumentError("unknown stereo mode '" + name + "'");
}

std::uint64_t frame_hash(const StereoFrame& frame)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const FrameBuffer* fb : {&frame.left, &frame.right}) {
        fnv(h, &fb->width, sizeof fb->width);
        fnv(h, &fb->height, sizeof fb->height);
        fnv(h, fb->rgb.data(), fb->rgb.size() * sizeof(float));
        fnv(h, fb->transmittance.data(), fb->transmittance.size() * sizeof(float));
    }
    return h;
}

std::vector<BenchRow> bench_table(const GaussianAvatar& avatar, const BenchConfig& config, std::ostream* progress)
{
    if (config.runs < 1 || config.warmup < 0) throw ArgumentError("bench needs runs >= 1 and warmup >= 0");
    if (config.modes.empty() || config.resolutions.empty()) throw ArgumentError("bench needs modes and resolutions");
    using Clock = std::chrono::steady_clock;

    const PosedGaussians posed = rest_pose(avatar);
    std::vector<BenchRow> rows;
    for (int res : config.resolutions) {
        if (res <= 0) throw ArgumentError("resolution must be positive");
        StereoRenderJob job;
        job.posed = &posed;
        job.cameras = eye_extrinsics(default_head(), config.ipd);
        job.cameras.intrinsics = intrinsics_from_fov(config.fov_deg, res, res);

        std::map<StereoMode, std::vector<double>> times;
        std::map<StereoMode, std::uint64_t> hashes;
        std::map<StereoMode, bool> consistent;
        std::map<StereoMode, StereoRenderer> renderers;
        std::map<StereoMode, StereoFrame> last;
        for (int run = 0; run < config.warmup + config.runs; ++run) {
            for (StereoMode mode : config.modes) {
                job.mode = mode;
                const auto t0 = Clock::now();
                const StereoFrame* frame = nullptr;
                if (mode == StereoMode::batched) {
                    frame = &renderers[mode].render(job);
                } else {
                    last[mode] = render_stereo_sequential(job);
                    frame = &last[mode];
                }
                const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
                const std::uint64_t h = frame_hash(*frame);
                if (!hashes.count(mode)) {
                    hashes[mode] = h;
                    consistent[mode] = true;
                } else if (hashes[mode] != h) {
                    consistent[mode] = false;
                }
                if (run >= config.warmup) times[mode].push_back(ms);
                if (run + 1 == config.warmup + config.runs && config.dump_dir) {
                    std::filesystem::create_directories(*config.dump_dir);
                    const std::string stem = std::to_string(res) + "_" +
                                             (mode == StereoMode::batched ? "batched" : "sequential");
                    write_png(*config.dump_dir / (stem + "_L.png"), to_srgb8(frame->left, config.dump_alpha));
                    write_png(*config.dump_dir / (stem + "_R.png"), to_srgb8(frame->right, config.dump_alpha));
                }
            }
        }
        for (StereoMode mode : config.modes) {
            BenchRow row;
            row.resolution = res;
            row.mode = mode;
            row.render_time_ms = median(times[mode]);
            row.fps = 1000.0 / row.render_time_ms;
            row.image_hash = hashes[mode];
            row.images_consistent = consistent[mode];
            rows.push_back(row);
            if (progress) {
                *progress << res << "x" << res << " " << mode_label(mode) << ": " << row.render_time_ms << " ms\n";
            }
        }
    }
    return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows)
{
    out << "resolution,mode,render_time_ms,fps\n";
    char line[128];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%dx%d,%s,%.3f,%.2f\n", r.resolution, r.resolution,
                      mode_label(r.mode).c_str(), r.render_time_ms, r.fps);
        out << line;
    }
}

void print_bench_table(std::ostream& out, const std::vector<BenchRow>& rows)
{
    char line[160];
    std::snprintf(line, sizeof line, "%-12s %-8s %16s %10s\n", "Resolution", "Mode", "Render Time (ms)", "FPS");
    out << line;
    for (const auto& r : rows) {
        const std::string res = std::to_string(r.resolution) + "x" + std::to_string(r.resolution);
        std::snprintf(line, sizeof line, "%-12s %-8s %16.2f %10.2f\n", res.c_str(), mode_label(r.mode).c_str(),
                      r.render_time_ms, r.fps);
        out << line;
    }
    // Ratio per resolution when both modes ran.
    for (const auto& a : rows) {
        if (a.mode != StereoMode::batched) continue;
        for (const auto& b : rows) {
            if (b.mode == StereoMode::sequential && b.resolution == a.resolution) {
                std::snprintf(line, sizeof line, "%dx%d speedup (w/o BB / w/ BB): %.3fx\n", a.resolution,
                              a.resolution, b.render_time_ms / a.render_time_ms);
                out << line;
            }
        }
    }
}

} // namespace gastream
