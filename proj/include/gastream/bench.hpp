#pragma once

#include "gastream/avatar.hpp"
#include "gastream/binocular.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace gastream {

struct BenchConfig {
    std::vector<int> resolutions{512, 768, 1024};
    std::vector<StereoMode> modes{StereoMode::batched, StereoMode::sequential};
    int warmup = 5;
    int runs = 20;
    double fov_deg = kDefaultFovDeg;
    double ipd = kDefaultIpd;
    std::optional<std::filesystem::path> dump_dir; // PNG per resolution, mode and eye
    bool dump_alpha = false;
};

struct BenchRow {
    int resolution = 0;
    StereoMode mode = StereoMode::batched;
    double render_time_ms = 0.0; // median
    double fps = 0.0;            // 1000 / render_time_ms
    std::uint64_t image_hash = 0;
    bool images_consistent = true; // every run produced the same pixels
};

std::string mode_label(StereoMode mode);       // "w/ BB", "w/o BB"
StereoMode parse_mode(const std::string& name); // batched | sequential | on | off

// FNV-1a over the raw float bytes of both eyes.
std::uint64_t frame_hash(const StereoFrame& frame);

// Renders the avatar in its rest pose from the default head for every resolution and
// mode. Modes are interleaved run by run so drift hits both equally.
std::vector<BenchRow> bench_table(const GaussianAvatar& avatar, const BenchConfig& config,
                                  std::ostream* progress = nullptr);

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);
void print_bench_table(std::ostream& out, const std::vector<BenchRow>& rows);

} // namespace gastream
