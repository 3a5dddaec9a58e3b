#pragma once

#include "gastream/avatar.hpp"
#include "gastream/camera.hpp"
#include "gastream/rasterizer.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gastream {

struct ViewParams {
    double fov_deg = kDefaultFovDeg;
    int width = kDefaultResolution;
    int height = kDefaultResolution;
};

// One text message per frame. Explicit per-eye views take precedence over the head pose;
// with neither, the session's default head is used.
struct FrameRequest {
    std::uint64_t frame_id = 0;
    Pose pose;
    std::optional<HeadPose> head;
    std::optional<std::array<Rigid, 2>> views; // world_to_camera, left then right
    std::optional<ViewParams> view_params;
};

// Throws FormatError on malformed JSON or missing/mistyped fields.
FrameRequest parse_request(std::string_view text);
std::string serialize_request(const FrameRequest& req);

enum class FrameStatus : std::uint8_t { ok = 0, stale = 1, error = 2 };

struct FrameTimings {
    float skinning_ms = 0.0f;
    float render_ms = 0.0f;
    float encode_ms = 0.0f;
};

struct FrameResponse {
    std::uint64_t frame_id = 0;
    FrameStatus status = FrameStatus::ok;
    FrameTimings timings;
    std::vector<std::uint8_t> left;  // JPEG, or the UTF-8 error message when status == error
    std::vector<std::uint8_t> right;

    std::string error_message() const { return {left.begin(), left.end()}; }
};

inline constexpr std::uint32_t kResponseVersion = 1;
// "GSFR" u32 version, u64 frame_id, u8 status, u32 len_L, u32 len_R, 3 x f32 timings.
inline constexpr std::size_t kResponseHeaderSize = 37;

std::vector<std::uint8_t> serialize_response(const FrameResponse& resp);
FrameResponse parse_response(std::span<const std::uint8_t> bytes);

FrameResponse error_response(std::uint64_t frame_id, const std::string& message);

// sRGB conversion and JPEG encoding of both eyes, framed as an ok response.
std::vector<std::uint8_t> encode_response(std::uint64_t frame_id, const FrameBuffer& left, const FrameBuffer& right,
                                          int quality, const FrameTimings& timings = {});

} // namespace gastream
