#pragma once

#include "gastream/avatar.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gastream {

struct TraceFrame {
    std::uint64_t frame_id = 0;
    Pose pose;
};

enum class Motion { still, swing };

Motion parse_motion(const std::string& name);

// Text format, one frame per line: frame_id, root q (w x y z), root t (x y z), then one
// quaternion per non-root joint. '#' starts a comment.
std::vector<TraceFrame> read_trace(const std::filesystem::path& path);
void write_trace(const std::filesystem::path& path, const std::vector<TraceFrame>& frames);

// Deterministic trace with ids 1..frames. `swing` sways the root about +Y and swings every
// joint about its own fixed axis; `still` holds the identity pose.
std::vector<TraceFrame> generate_trace(std::size_t frames, Motion motion, std::size_t bone_count,
                                       double rate_hz = 30.0);

} // namespace gastream
