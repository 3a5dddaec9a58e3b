#pragma once

#include "gastream/avatar.hpp"
#include "gastream/binocular.hpp"
#include "gastream/protocol.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string_view>
#include <vector>

namespace gastream {

struct ServerConfig {
    int resolution = kDefaultResolution;
    double fov_deg = kDefaultFovDeg;
    double ipd = kDefaultIpd;
    int jpeg_quality = 80;
    StereoMode mode = StereoMode::batched;
    Rgb background{0.0f, 0.0f, 0.0f};
};

void validate(const ServerConfig& config);

// Head used when a request carries neither a head pose nor explicit views: 2.2 m in
// front of the avatar at chest height, looking back along -Z with +Y up.
HeadPose default_head();

// Largest per-eye width/height a request may ask for.
inline constexpr int kMaxRequestResolution = 4096;

// Camera pair a request resolves to under a session config.
StereoCameraPair resolve_cameras(const FrameRequest& req, const ServerConfig& config);

// Per-connection state. Frame processing is serialized; the avatar is shared read-only.
// Frame id 0 is reserved (it tags replies to undecodable requests), so a fresh session
// accepts ids from 1.
class Session {
public:
    Session(std::shared_ptr<const GaussianAvatar> avatar, ServerConfig config);

    // Decode, stale check, pose + render, encode. Errors become error responses.
    FrameResponse handle_frame(const FrameRequest& req);

    // Text request in, binary GSFR frame out.
    std::vector<std::uint8_t> handle_message(std::string_view text);

    // Pre-encode framebuffers for a request, without stale bookkeeping. Valid until the
    // next render on this session. Not synchronized with handle_frame.
    const StereoFrame& render_request(const FrameRequest& req, FrameTimings* timings = nullptr);

    std::uint64_t last_served() const { return last_served_.load(); }
    std::uint64_t renders() const { return renders_.load(); }
    const ServerConfig& config() const { return config_; }

private:
    // Atomically advances last_served to id; false if id is not newer.
    bool claim(std::uint64_t id);

    std::shared_ptr<const GaussianAvatar> avatar_;
    ServerConfig config_;
    std::mutex mutex_;
    std::atomic<std::uint64_t> last_served_{0};
    std::atomic<std::uint64_t> renders_{0};
    StereoRenderer renderer_;
    StereoFrame sequential_frame_;
};

} // namespace gastream
