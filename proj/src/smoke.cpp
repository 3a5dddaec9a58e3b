#include "gastream/smoke.hpp"

#include "gastream/metrics.hpp"
#include "gastream/net.hpp"

#include <algorithm>
#include <map>

namespace gastream {

bool run_smoke(const SmokeOptions& options, std::ostream& out)
{
    bool all = true;
    auto check = [&](bool ok, const std::string& what) {
        out << (ok ? "PASS " : "FAIL ") << what << '\n';
        all = all && ok;
    };

    auto avatar = std::make_shared<const GaussianAvatar>(
        synth_avatar({options.splats, options.bones, options.seed, 3}));
    ServerConfig config;
    config.resolution = options.resolution;
    config.jpeg_quality = options.jpeg_quality;

    StreamServer server(avatar, config, 0);
    server.start();
    const auto trace = generate_trace(options.frames, Motion::swing, options.bones, options.rate_hz);

    // Reference renders come from a separate session so the server's state is untouched.
    Session reference(avatar, config);
    std::map<std::uint64_t, const TraceFrame*> by_id;
    for (const auto& f : trace) by_id[f.frame_id] = &f;
    double worst_psnr = kPsnrIdentical;

    ReplayOptions ro;
    ro.port = server.port();
    ro.rate_hz = options.rate_hz;
    ro.on_frame = [&](const FrameResponse& resp, const Image8& left, const Image8& right) {
        FrameRequest req;
        req.frame_id = resp.frame_id;
        req.pose = by_id.at(resp.frame_id)->pose;
        const StereoFrame& direct = reference.render_request(req);
        worst_psnr = std::min({worst_psnr, psnr(normalized(left), normalized(to_srgb8(direct.left))),
                               psnr(normalized(right), normalized(to_srgb8(direct.right)))});
    };
    const ReplayReport report = replay_client(trace, ro);
    out << format_latency_table(report);
    check(report.failure.empty(), "replay completed without transport errors");
    check(report.ok == trace.size() && report.served_monotonic(), "every frame served, ids in order");
    check(worst_psnr >= 35.0, "decoded frames vs direct render PSNR >= 35 dB (worst " +
                                  std::to_string(worst_psnr) + " dB)");

    // New connection, new session: the reordered replay must see stale frames.
    ReplayOptions reordered = ro;
    reordered.reorder = true;
    reordered.on_frame = nullptr;
    const ReplayReport rr = replay_client(trace, reordered);
    const std::size_t expected_stale = trace.size() >= 6 ? (trace.size() - 6) / 10 + 1 : 0;
    check(rr.stale == expected_stale && rr.ok + rr.stale == trace.size() && rr.served_monotonic(),
          "reordered replay: " + std::to_string(rr.stale) + " stale of " + std::to_string(trace.size()) +
              ", served ids increasing");

    server.stop();
    return all;
}

} // namespace gastream
