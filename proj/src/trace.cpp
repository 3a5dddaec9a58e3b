#include "gastream/trace.hpp"

#include "gastream/errors.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace gastream {

Motion parse_motion(const std::string& name)
{
    if (name == "swing") return Motion::swing;
    if (name == "still") return Motion::still;
    throw ArgumentError("unknown motion '" + name + "' (expected swing or still)");
}

std::vector<TraceFrame> read_trace(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open trace " + path.string());
    std::vector<TraceFrame> frames;
    std::string line;
    std::size_t line_no = 0;
    std::size_t joints = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::vector<double> v;
        std::string tok;
        std::uint64_t id = 0;
        if (!(ss >> tok)) continue;
        try {
            std::size_t used = 0;
            id = std::stoull(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            while (ss >> tok) {
                v.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            }
        } catch (const std::logic_error&) {
            throw FormatError("trace line " + std::to_string(line_no) + ": not a number: " + tok);
        }
        if (v.size() < 7 || (v.size() - 7) % 4 != 0)
            throw FormatError("trace line " + std::to_string(line_no) + ": expected 7 + 4k values after the id");
        const std::size_t k = (v.size() - 7) / 4;
        if (!frames.empty() && k != joints)
            throw FormatError("trace line " + std::to_string(line_no) + ": joint count changed");
        joints = k;
        TraceFrame f;
        f.frame_id = id;
        f.pose.root_rotation = {v[0], v[1], v[2], v[3]};
        f.pose.root_translation = {v[4], v[5], v[6]};
        for (std::size_t j = 0; j < k; ++j) {
            const double* q = &v[7 + 4 * j];
            f.pose.joint_rotations.push_back({q[0], q[1], q[2], q[3]});
        }
        frames.push_back(std::move(f));
    }
    return frames;
}

void write_trace(const std::filesystem::path& path, const std::vector<TraceFrame>& frames)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace " + path.string());
    out << "# frame_id root_q(w x y z) root_t(x y z) joint_q(w x y z)...\n";
    out << std::setprecision(17);
    for (const auto& f : frames) {
        const auto& p = f.pose;
        out << f.frame_id << ' ' << p.root_rotation.w << ' ' << p.root_rotation.x << ' ' << p.root_rotation.y << ' '
            << p.root_rotation.z << ' ' << p.root_translation.x() << ' ' << p.root_translation.y() << ' '
            << p.root_translation.z();
        for (const auto& q : p.joint_rotations) out << ' ' << q.w << ' ' << q.x << ' ' << q.y << ' ' << q.z;
        out << '\n';
    }
    if (!out) throw std::runtime_error("failed writing trace " + path.string());
}

std::vector<TraceFrame> generate_trace(std::size_t frames, Motion motion, std::size_t bone_count, double rate_hz)
{
    if (bone_count == 0) throw ArgumentError("trace needs at least one bone");
    if (!(rate_hz > 0.0)) throw ArgumentError("rate must be positive");
    constexpr double pi = std::numbers::pi;
    std::vector<TraceFrame> out;
    out.reserve(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        TraceFrame f;
        f.frame_id = i + 1;
        f.pose = Pose::identity(bone_count);
        if (motion == Motion::swing) {
            const double t = static_cast<double>(i) / rate_hz;
            f.pose.root_rotation = Quat::from_axis_angle(Vec3::UnitY(), 0.35 * std::sin(2.0 * pi * 0.25 * t));
            f.pose.root_translation = Vec3(0.05 * std::sin(2.0 * pi * 0.5 * t), 0.0, 0.0);
            for (std::size_t j = 0; j < f.pose.joint_rotations.size(); ++j) {
                // Fixed per-joint axis walking around the sphere; staggered phases.
                const double a = 2.399963 * static_cast<double>(j + 1);
                const double zc = 1.0 - 2.0 * std::fmod(0.618034 * static_cast<double>(j + 1), 1.0);
                const double rc = std::sqrt(std::max(0.0, 1.0 - zc * zc));
                const Vec3 axis(rc * std::cos(a), rc * std::sin(a), zc);
                const double angle = 0.45 * std::sin(2.0 * pi * 0.5 * t + 0.7 * static_cast<double>(j));
                f.pose.joint_rotations[j] = Quat::from_axis_angle(axis, angle);
            }
        }
        out.push_back(std::move(f));
    }
    return out;
}

} // namespace gastream
