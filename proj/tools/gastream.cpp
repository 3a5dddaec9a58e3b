// gastream command-line entry point.
#include "gastream/bench.hpp"
#include "gastream/errors.hpp"
#include "gastream/image_io.hpp"
#include "gastream/metrics.hpp"
#include "gastream/net.hpp"
#include "gastream/smoke.hpp"
#include "gastream/trace.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

using namespace gastream;

namespace {

int cmd_synth(std::size_t splats, std::size_t bones, std::uint64_t seed, int sh_degree, const std::string& out)
{
    const GaussianAvatar avatar = synth_avatar({splats, bones, seed, sh_degree});
    save_avatar(avatar, out);
    std::cout << "wrote " << out << ": " << avatar.gaussians.count() << " splats, " << avatar.rig.bone_count()
              << " bones\n";
    return 0;
}

int cmd_serve(const std::string& avatar_path, int port, const std::string& address, const ServerConfig& config)
{
    // Block the shutdown signals in every thread; a dedicated waiter picks them up.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    auto avatar = std::make_shared<const GaussianAvatar>(load_avatar(avatar_path));
    StreamServer server(avatar, config, static_cast<unsigned short>(port), address);
    server.start();
    std::cout << "serving " << avatar_path << " (" << avatar->gaussians.count() << " splats) on ws://" << address
              << ":" << server.port() << "/  " << config.resolution << "px, fov " << config.fov_deg << ", ipd "
              << config.ipd << ", jpeg q" << config.jpeg_quality << ", " << mode_label(config.mode) << std::endl;
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
    });
    server.wait();
    waiter.join();
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stereo Gaussian avatar streaming engine"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic rigged avatar (.gsav)");
    std::size_t synth_splats = 50000, synth_bones = 24;
    std::uint64_t synth_seed = 1;
    int synth_sh = 3;
    std::string synth_out;
    synth->add_option("--splats", synth_splats, "Splat count")->capture_default_str();
    synth->add_option("--bones", synth_bones, "Bone count")->capture_default_str();
    synth->add_option("--seed", synth_seed, "RNG seed")->capture_default_str();
    synth->add_option("--sh-degree", synth_sh, "SH degree")->check(CLI::Range(0, 3))->capture_default_str();
    synth->add_option("--out", synth_out, "Output path")->required();

    // serve
    auto* serve = app.add_subcommand("serve", "Run the WebSocket frame server");
    std::string serve_avatar, serve_address = "127.0.0.1", batching = "on";
    int serve_port = 8765;
    ServerConfig config;
    serve->add_option("--avatar", serve_avatar, "Avatar file")->required()->check(CLI::ExistingFile);
    serve->add_option("--port", serve_port, "TCP port (0 = ephemeral)")->check(CLI::Range(0, 65535))->capture_default_str();
    serve->add_option("--address", serve_address, "Bind address")->capture_default_str();
    serve->add_option("--res", config.resolution, "Per-eye resolution")->capture_default_str();
    serve->add_option("--fov", config.fov_deg, "Field of view, degrees")->capture_default_str();
    serve->add_option("--ipd", config.ipd, "Interpupillary distance, meters")->capture_default_str();
    serve->add_option("--jpeg-quality", config.jpeg_quality, "JPEG quality")->check(CLI::Range(1, 100))->capture_default_str();
    serve->add_option("--batching", batching, "Binocular Batching")->check(CLI::IsMember({"on", "off"}))->capture_default_str();

    // bench
    auto* bench = app.add_subcommand("bench", "Batched vs sequential stereo render timing");
    std::size_t bench_splats = 50000, bench_bones = 24;
    std::uint64_t bench_seed = 1;
    std::string bench_avatar, bench_mode = "both", bench_csv, bench_dump;
    std::vector<int> bench_res;
    BenchConfig bench_cfg;
    bench->add_option("--avatar", bench_avatar, "Avatar file (default: synthesize one)")->check(CLI::ExistingFile);
    bench->add_option("--splats", bench_splats, "Splats for the synthetic avatar")->capture_default_str();
    bench->add_option("--bones", bench_bones, "Bones for the synthetic avatar")->capture_default_str();
    bench->add_option("--seed", bench_seed, "Seed for the synthetic avatar")->capture_default_str();
    bench->add_option("--res", bench_res, "Per-eye resolution(s); default 512 768 1024");
    bench->add_option("--mode", bench_mode, "Modes to run")->check(CLI::IsMember({"both", "batched", "sequential"}))->capture_default_str();
    bench->add_option("--runs", bench_cfg.runs, "Timed runs per row")->check(CLI::PositiveNumber)->capture_default_str();
    bench->add_option("--warmup", bench_cfg.warmup, "Warm-up runs per row")->check(CLI::NonNegativeNumber)->capture_default_str();
    bench->add_option("--csv", bench_csv, "Write rows to this CSV file");
    bench->add_option("--dump-frames", bench_dump, "Write PNGs of the final frames here");
    bench->add_flag("--alpha", bench_cfg.dump_alpha, "Dump RGBA (alpha = coverage)");

    // metrics
    auto* metrics = app.add_subcommand("metrics", "L1 / PSNR / SSIM between two images");
    std::string metric_a, metric_b;
    bool metric_csv = false;
    metrics->add_option("a", metric_a, "First image")->required()->check(CLI::ExistingFile);
    metrics->add_option("b", metric_b, "Second image")->required()->check(CLI::ExistingFile);
    metrics->add_flag("--csv", metric_csv, "Print one CSV row");

    // trace-gen
    auto* tracegen = app.add_subcommand("trace-gen", "Write a deterministic pose trace");
    std::size_t trace_frames = 100, trace_bones = 24;
    std::string trace_motion = "swing", trace_out;
    double trace_rate = 30.0;
    tracegen->add_option("--frames", trace_frames, "Frame count")->capture_default_str();
    tracegen->add_option("--motion", trace_motion, "Motion")->check(CLI::IsMember({"swing", "still"}))->capture_default_str();
    tracegen->add_option("--bones", trace_bones, "Bone count of the target rig")->capture_default_str();
    tracegen->add_option("--rate", trace_rate, "Sample rate, Hz")->capture_default_str();
    tracegen->add_option("--out", trace_out, "Output path")->required();

    // replay
    auto* replay = app.add_subcommand("replay", "Stream a pose trace to a server and report latency");
    std::string replay_trace;
    ReplayOptions ro;
    int replay_port = 8765;
    replay->add_option("--trace", replay_trace, "Pose trace")->required()->check(CLI::ExistingFile);
    replay->add_option("--host", ro.host, "Server host")->capture_default_str();
    replay->add_option("--port", replay_port, "Server port")->check(CLI::Range(1, 65535))->capture_default_str();
    replay->add_option("--rate", ro.rate_hz, "Send rate, Hz")->capture_default_str();
    replay->add_flag("--reorder", ro.reorder, "Swap frame pairs to provoke stale responses");

    // smoke
    auto* smoke = app.add_subcommand("smoke", "synth -> serve -> replay -> metrics, in process");
    SmokeOptions smoke_opts;
    smoke->add_option("--splats", smoke_opts.splats, "Splat count")->capture_default_str();
    smoke->add_option("--res", smoke_opts.resolution, "Per-eye resolution")->capture_default_str();
    smoke->add_option("--frames", smoke_opts.frames, "Frames to replay")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) return cmd_synth(synth_splats, synth_bones, synth_seed, synth_sh, synth_out);
        if (*serve) {
            config.mode = parse_mode(batching);
            validate(config);
            return cmd_serve(serve_avatar, serve_port, serve_address, config);
        }
        if (*bench) {
            const GaussianAvatar avatar =
                bench_avatar.empty() ? synth_avatar({bench_splats, bench_bones, bench_seed, 3}) : load_avatar(bench_avatar);
            if (!bench_res.empty()) bench_cfg.resolutions = bench_res;
            if (bench_mode != "both") bench_cfg.modes = {parse_mode(bench_mode)};
            if (!bench_dump.empty()) bench_cfg.dump_dir = bench_dump;
            std::cout << avatar.gaussians.count() << " splats, " << bench_cfg.warmup << " warm-up + " << bench_cfg.runs
                      << " timed runs per row\n";
            const auto rows = bench_table(avatar, bench_cfg, &std::cerr);
            print_bench_table(std::cout, rows);
            for (const auto& r : rows) {
                if (!r.images_consistent)
                    std::cerr << "warning: " << r.resolution << " " << mode_label(r.mode) << " images varied across runs\n";
            }
            if (!bench_csv.empty()) {
                std::ofstream csv(bench_csv);
                write_bench_csv(csv, rows);
                if (!csv) throw std::runtime_error("failed writing " + bench_csv);
            }
            return 0;
        }
        if (*metrics) {
            const MetricReport m = compare_images(metric_a, metric_b);
            if (metric_csv) {
                std::printf("l1,psnr,ssim\n%.9g,%.9g,%.9g\n", m.l1, m.psnr, m.ssim);
            } else {
                std::printf("L1   %.9g\nPSNR %.6g dB\nSSIM %.9g\n", m.l1, m.psnr, m.ssim);
            }
            return 0;
        }
        if (*tracegen) {
            write_trace(trace_out, generate_trace(trace_frames, parse_motion(trace_motion), trace_bones, trace_rate));
            std::cout << "wrote " << trace_frames << " frames to " << trace_out << '\n';
            return 0;
        }
        if (*replay) {
            ro.port = static_cast<unsigned short>(replay_port);
            const ReplayReport report = replay_client(read_trace(replay_trace), ro);
            std::cout << format_latency_table(report);
            return report.failure.empty() && report.errors == 0 ? 0 : 1;
        }
        if (*smoke) return run_smoke(smoke_opts, std::cout) ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
