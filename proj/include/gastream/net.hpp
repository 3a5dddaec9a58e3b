#pragma once

#include "gastream/image_io.hpp"
#include "gastream/protocol.hpp"
#include "gastream/session.hpp"
#include "gastream/trace.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gastream {

// WebSocket frame server. Each connection owns a Session; text messages are requests,
// binary messages are GSFR responses.
class StreamServer {
public:
    // Port 0 binds an ephemeral port; see port().
    StreamServer(std::shared_ptr<const GaussianAvatar> avatar, ServerConfig config, unsigned short port,
                 const std::string& address = "127.0.0.1", int io_threads = 2);
    ~StreamServer();

    StreamServer(const StreamServer&) = delete;
    StreamServer& operator=(const StreamServer&) = delete;

    unsigned short port() const;

    // Runs the accept loop on background threads.
    void start();
    // Blocks until stop() is called from elsewhere (or a signal handler).
    void wait();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct ReplayOptions {
    std::string host = "127.0.0.1";
    unsigned short port = 0;
    double rate_hz = 30.0;
    // Swap frames (10k+4, 10k+5) on the wire so the later id arrives first and the
    // earlier one comes back stale.
    bool reorder = false;
    std::optional<HeadPose> head;
    std::optional<ViewParams> view_params;
    // Called with each ok frame after decoding.
    std::function<void(const FrameResponse&, const Image8& left, const Image8& right)> on_frame;
};

struct FrameRecord {
    std::uint64_t frame_id = 0;
    FrameStatus status = FrameStatus::ok;
    double tracking_ms = 0.0; // pose packaging on the client
    double round_trip_ms = 0.0;
    double skinning_ms = 0.0;
    double render_ms = 0.0;
    double encode_ms = 0.0;
    double decode_ms = 0.0;
};

struct ReplayReport {
    std::vector<FrameRecord> frames; // in send order
    std::size_t sent = 0;
    std::size_t ok = 0;
    std::size_t stale = 0;
    std::size_t errors = 0;
    std::vector<std::uint64_t> served_ids; // ids of ok responses, in arrival order
    std::string failure;                   // set when the connection broke early

    bool served_monotonic() const;
};

ReplayReport replay_client(const std::vector<TraceFrame>& trace, const ReplayOptions& options);

// Median latency per stage, laid out by stage and where it runs (backend vs client).
std::string format_latency_table(const ReplayReport& report);

} // namespace gastream
