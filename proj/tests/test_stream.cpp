#include "gastream/errors.hpp"
#include "gastream/net.hpp"
#include "support.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace testing;

namespace {

struct LiveServer {
    std::shared_ptr<const GaussianAvatar> avatar;
    StreamServer server;

    explicit LiveServer(int resolution = 64)
        : avatar(std::make_shared<const GaussianAvatar>(synth_avatar({2000, 6, 21, 1}))),
          server(avatar, [&] {
              ServerConfig c;
              c.resolution = resolution;
              return c;
          }(), 0)
    {
        server.start();
    }
    ~LiveServer() { server.stop(); }
};

} // namespace

TEST_CASE("trace generation")
{
    const auto trace = generate_trace(100, Motion::swing, 6);
    REQUIRE(trace.size() == 100);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        CHECK(trace[i].frame_id == i + 1);
        CHECK(trace[i].pose.joint_rotations.size() == 5);
        CHECK_NOTHROW(validate_pose(trace[i].pose, 6));
    }
    const auto still = generate_trace(3, Motion::still, 6);
    CHECK(still[2].pose.root_rotation.w == 1.0);
    CHECK(parse_motion("swing") == Motion::swing);
    CHECK_THROWS_AS(parse_motion("dance"), ArgumentError);
}

TEST_CASE("trace file round trip and errors")
{
    const auto trace = generate_trace(12, Motion::swing, 4);
    const auto path = temp_path("trace.txt");
    write_trace(path, trace);
    const auto back = read_trace(path);
    REQUIRE(back.size() == trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        CHECK(back[i].frame_id == trace[i].frame_id);
        CHECK(back[i].pose.root_rotation.y == trace[i].pose.root_rotation.y);
        CHECK(back[i].pose.root_translation == trace[i].pose.root_translation);
        CHECK(back[i].pose.joint_rotations[2].x == trace[i].pose.joint_rotations[2].x);
    }

    const auto bad = temp_path("bad_trace.txt");
    std::ofstream(bad) << "1 1 0 0 0 0 0 0\n2 1 0 0 0 0 0 0 1 0 0 0\n";
    CHECK_THROWS_AS(read_trace(bad), FormatError);
    std::ofstream(bad) << "# header\n1 1 0 0 zero 0 0 0\n";
    CHECK_THROWS_AS(read_trace(bad), FormatError);
    std::ofstream(bad) << "1 1 0 0 0 0 0 0 1 0 0\n";
    CHECK_THROWS_AS(read_trace(bad), FormatError);
    CHECK_THROWS_AS(read_trace(temp_path("no_such_trace.txt")), FormatError);
}

TEST_CASE("replay over a live socket serves every frame in order")
{
    LiveServer live;
    ReplayOptions opts;
    opts.port = live.server.port();
    opts.rate_hz = 500.0;
    std::size_t decoded = 0;
    opts.on_frame = [&](const FrameResponse&, const Image8& l, const Image8& r) {
        decoded += l.width == 64 && r.height == 64;
    };
    const auto report = replay_client(generate_trace(100, Motion::swing, 6), opts);
    CHECK(report.failure.empty());
    CHECK(report.sent == 100);
    CHECK(report.ok == 100);
    CHECK(report.stale == 0);
    CHECK(report.errors == 0);
    CHECK(decoded == 100);
    REQUIRE(report.served_ids.size() == 100);
    for (std::size_t i = 0; i < 100; ++i) CHECK(report.served_ids[i] == i + 1);
    CHECK(report.served_monotonic());
}

TEST_CASE("reordered replay reports the swapped-back frames as stale")
{
    LiveServer live;
    ReplayOptions opts;
    opts.port = live.server.port();
    opts.rate_hz = 500.0;
    opts.reorder = true;
    const auto report = replay_client(generate_trace(100, Motion::swing, 6), opts);
    CHECK(report.failure.empty());
    CHECK(report.stale == 10);
    CHECK(report.ok == 90);
    CHECK(report.served_monotonic());
    for (const auto& f : report.frames)
        if (f.status == FrameStatus::stale) CHECK(f.frame_id % 10 == 5);
}

TEST_CASE("each connection gets its own session")
{
    LiveServer live;
    ReplayOptions opts;
    opts.port = live.server.port();
    opts.rate_hz = 500.0;
    const auto trace = generate_trace(5, Motion::still, 6);
    CHECK(replay_client(trace, opts).ok == 5);
    CHECK(replay_client(trace, opts).ok == 5);
}

TEST_CASE("replay against a closed port reports a failure")
{
    unsigned short port = 0;
    {
        LiveServer live;
        port = live.server.port();
    }
    ReplayOptions opts;
    opts.port = port;
    const auto report = replay_client(generate_trace(3, Motion::still, 6), opts);
    CHECK_FALSE(report.failure.empty());
    CHECK(report.ok == 0);
}

TEST_CASE("latency table has every stage")
{
    LiveServer live;
    ReplayOptions opts;
    opts.port = live.server.port();
    opts.rate_hz = 500.0;
    const auto table = format_latency_table(replay_client(generate_trace(10, Motion::swing, 6), opts));
    for (const char* row : {"Stage", "Location", "Time (ms)", "Tracking & pose packaging", "Localhost communication",
                            "Pose conditioning (FK + LBS)", "Stereo rendering", "Image encoding (JPEG)",
                            "Image decoding", "End-to-end latency"})
        CHECK(table.find(row) != std::string::npos);
}
