#include "gastream/net.hpp"

#include "gastream/errors.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace gastream {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, std::shared_ptr<const GaussianAvatar> avatar, const ServerConfig& config)
        : ws_(std::move(socket)), session_(std::move(avatar), config)
    {
    }

    void start()
    {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(beast::bind_front_handler(&Connection::on_accept, shared_from_this()));
    }

private:
    void on_accept(beast::error_code ec)
    {
        if (ec) return;
        read();
    }

    void read()
    {
        buffer_.clear();
        ws_.async_read(buffer_, beast::bind_front_handler(&Connection::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t)
    {
        if (ec) return; // closed or broken; the connection dies with its last handler
        const std::string text = beast::buffers_to_string(buffer_.data());
        if (ws_.got_text()) {
            reply_ = session_.handle_message(text);
        } else {
            reply_ = serialize_response(error_response(0, "requests must be text messages"));
        }
        ws_.binary(true);
        ws_.async_write(asio::buffer(reply_), beast::bind_front_handler(&Connection::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t)
    {
        if (ec) return;
        read();
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    std::vector<std::uint8_t> reply_;
    Session session_;
};

double median(std::vector<double> v)
{
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

struct StreamServer::Impl {
    std::shared_ptr<const GaussianAvatar> avatar;
    ServerConfig config;
    asio::io_context ioc;
    tcp::acceptor acceptor;
    int io_threads;
    std::vector<std::thread> threads;
    std::mutex mutex;
    std::condition_variable stopped_cv;
    bool stopped = false;

    Impl(std::shared_ptr<const GaussianAvatar> a, ServerConfig c, int n) : avatar(std::move(a)), config(c), ioc(n),
        acceptor(asio::make_strand(ioc)), io_threads(n)
    {
    }

    void accept()
    {
        acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) {
                if (ec == asio::error::operation_aborted) return;
                std::cerr << "accept failed: " << ec.message() << '\n';
            } else {
                beast::error_code ignored;
                socket.set_option(tcp::no_delay(true), ignored);
                std::make_shared<Connection>(std::move(socket), avatar, config)->start();
            }
            accept();
        });
    }
};

StreamServer::StreamServer(std::shared_ptr<const GaussianAvatar> avatar, ServerConfig config, unsigned short port,
                           const std::string& address, int io_threads)
{
    if (!avatar) throw ArgumentError("server needs an avatar");
    validate(config);
    if (io_threads < 1) throw ArgumentError("server needs at least one io thread");
    impl_ = std::make_unique<Impl>(std::move(avatar), config, io_threads);
    const tcp::endpoint endpoint(asio::ip::make_address(address), port);
    auto& acc = impl_->acceptor;
    acc.open(endpoint.protocol());
    acc.set_option(asio::socket_base::reuse_address(true));
    acc.bind(endpoint);
    acc.listen(asio::socket_base::max_listen_connections);
}

StreamServer::~StreamServer()
{
    stop();
}

unsigned short StreamServer::port() const
{
    return impl_->acceptor.local_endpoint().port();
}

void StreamServer::start()
{
    impl_->accept();
    for (int i = 0; i < impl_->io_threads; ++i) impl_->threads.emplace_back([this] { impl_->ioc.run(); });
}

void StreamServer::wait()
{
    std::unique_lock lock(impl_->mutex);
    impl_->stopped_cv.wait(lock, [this] { return impl_->stopped; });
}

void StreamServer::stop()
{
    {
        std::lock_guard lock(impl_->mutex);
        if (impl_->stopped) return;
        impl_->stopped = true;
    }
    impl_->ioc.stop();
    for (auto& t : impl_->threads) t.join();
    impl_->threads.clear();
    impl_->stopped_cv.notify_all();
}

bool ReplayReport::served_monotonic() const
{
    return std::adjacent_find(served_ids.begin(), served_ids.end(), [](auto a, auto b) { return b <= a; }) ==
           served_ids.end();
}

ReplayReport replay_client(const std::vector<TraceFrame>& trace, const ReplayOptions& options)
{
    using Clock = std::chrono::steady_clock;
    if (!(options.rate_hz > 0.0)) throw ArgumentError("replay rate must be positive");

    std::vector<std::size_t> order(trace.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (options.reorder) {
        for (std::size_t i = 4; i + 1 < order.size(); i += 10) std::swap(order[i], order[i + 1]);
    }

    ReplayReport report;
    asio::io_context ioc;
    websocket::stream<beast::tcp_stream> ws(ioc);
    try {
        tcp::resolver resolver(ioc);
        const auto endpoints = resolver.resolve(options.host, std::to_string(options.port));
        beast::get_lowest_layer(ws).connect(endpoints);
        // Small request frames otherwise wait on delayed ACKs.
        beast::get_lowest_layer(ws).socket().set_option(tcp::no_delay(true));
        ws.handshake(options.host + ":" + std::to_string(options.port), "/");
    } catch (const std::exception& e) {
        report.failure = std::string("connect failed: ") + e.what();
        return report;
    }
    ws.text(true);

    const auto period = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / options.rate_hz));
    auto next_send = Clock::now();
    beast::flat_buffer buffer;
    for (std::size_t idx : order) {
        std::this_thread::sleep_until(next_send);
        next_send += period;

        FrameRecord rec;
        rec.frame_id = trace[idx].frame_id;
        try {
            auto t0 = Clock::now();
            FrameRequest req;
            req.frame_id = trace[idx].frame_id;
            req.pose = trace[idx].pose;
            req.head = options.head;
            req.view_params = options.view_params;
            const std::string text = serialize_request(req);
            rec.tracking_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();

            t0 = Clock::now();
            ws.write(asio::buffer(text));
            ++report.sent;
            buffer.clear();
            ws.read(buffer);
            rec.round_trip_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();

            const auto data = buffer.data();
            const FrameResponse resp =
                parse_response({static_cast<const std::uint8_t*>(data.data()), data.size()});
            rec.status = resp.status;
            rec.skinning_ms = resp.timings.skinning_ms;
            rec.render_ms = resp.timings.render_ms;
            rec.encode_ms = resp.timings.encode_ms;
            if (resp.frame_id != req.frame_id && resp.status != FrameStatus::error)
                throw FormatError("response echoes frame " + std::to_string(resp.frame_id) + " for request " +
                                  std::to_string(req.frame_id));
            switch (resp.status) {
            case FrameStatus::ok: {
                t0 = Clock::now();
                const Image8 left = decode_jpeg(resp.left);
                const Image8 right = decode_jpeg(resp.right);
                rec.decode_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
                ++report.ok;
                report.served_ids.push_back(resp.frame_id);
                if (options.on_frame) options.on_frame(resp, left, right);
                break;
            }
            case FrameStatus::stale:
                ++report.stale;
                break;
            case FrameStatus::error:
                ++report.errors;
                std::cerr << "frame " << req.frame_id << ": " << resp.error_message() << '\n';
                break;
            }
        } catch (const std::exception& e) {
            report.failure = e.what();
            ++report.errors;
            report.frames.push_back(rec);
            return report;
        }
        report.frames.push_back(rec);
    }
    beast::error_code ec;
    ws.close(websocket::close_code::normal, ec);
    return report;
}

std::string format_latency_table(const ReplayReport& report)
{
    std::vector<double> tracking, comm, skin, render, encode, decode, e2e;
    for (const auto& f : report.frames) {
        if (f.status != FrameStatus::ok) continue;
        const double backend = f.skinning_ms + f.render_ms + f.encode_ms;
        tracking.push_back(f.tracking_ms);
        comm.push_back(std::max(0.0, f.round_trip_ms - backend));
        skin.push_back(f.skinning_ms);
        render.push_back(f.render_ms);
        encode.push_back(f.encode_ms);
        decode.push_back(f.decode_ms);
        e2e.push_back(f.tracking_ms + f.round_trip_ms + f.decode_ms);
    }
    std::ostringstream out;
    char line[160];
    auto row = [&](const char* stage, const char* where, double ms) {
        std::snprintf(line, sizeof line, "%-42s %-26s %10.3f\n", stage, where, ms);
        out << line;
    };
    std::snprintf(line, sizeof line, "%-42s %-26s %10s\n", "Stage", "Location", "Time (ms)");
    out << line;
    row("Tracking & pose packaging", "Client", median(tracking));
    row("Localhost communication (request/response)", "Backend <-> Client", median(comm));
    row("Pose conditioning (FK + LBS)", "Backend", median(skin));
    row("Stereo rendering", "Backend", median(render));
    row("Image encoding (JPEG)", "Backend", median(encode));
    row("Image decoding", "Client", median(decode));
    row("End-to-end latency", "-", median(e2e));
    out << "frames sent " << report.sent << ", ok " << report.ok << ", stale " << report.stale << ", errors "
        << report.errors << " (medians over ok frames)\n";
    if (!report.failure.empty()) out << "replay stopped early: " << report.failure << '\n';
    return out.str();
}

} // namespace gastream
