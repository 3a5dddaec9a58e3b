#include "gastream/protocol.hpp"

#include "gastream/errors.hpp"
#include "gastream/image_io.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>

namespace gastream {

namespace {

using nlohmann::json;

template <std::size_t N>
std::array<double, N> number_array(const json& j, const char* field)
{
    if (!j.is_array() || j.size() != N)
        throw FormatError(std::string("field '") + field + "' must be an array of " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        if (!j[i].is_number()) throw FormatError(std::string("field '") + field + "' must contain numbers");
        out[i] = j[i].get<double>();
    }
    return out;
}

const json& member(const json& obj, const char* key)
{
    auto it = obj.find(key);
    if (it == obj.end()) throw FormatError(std::string("missing field '") + key + "'");
    return *it;
}

Quat quat_of(const json& j, const char* field)
{
    const auto a = number_array<4>(j, field);
    return {a[0], a[1], a[2], a[3]};
}

Vec3 vec_of(const json& j, const char* field)
{
    const auto a = number_array<3>(j, field);
    return {a[0], a[1], a[2]};
}

json quat_json(const Quat& q) { return json::array({q.w, q.x, q.y, q.z}); }
json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

// Rotation extraction for head.q on the way out: Eigen's quaternion from a rotation matrix.
Quat quat_from_matrix(const Mat3& R)
{
    const Eigen::Quaterniond q(R);
    return {q.w(), q.x(), q.y(), q.z()};
}

template <typename T>
void put(std::vector<std::uint8_t>& out, T value)
{
    static_assert(std::endian::native == std::endian::little, "wire format is little-endian");
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T get(std::span<const std::uint8_t> bytes, std::size_t& pos)
{
    T value;
    std::memcpy(&value, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

FrameRequest request_from_json(const json& j)
{
    if (!j.is_object()) throw FormatError("request must be a JSON object");

    FrameRequest req;
    const json& id = member(j, "frame_id");
    if (!id.is_number_unsigned()) throw FormatError("field 'frame_id' must be an unsigned integer");
    req.frame_id = id.get<std::uint64_t>();

    const json& pose = member(j, "pose");
    if (!pose.is_object()) throw FormatError("field 'pose' must be an object");
    req.pose.root_rotation = quat_of(member(pose, "root_q"), "root_q");
    req.pose.root_translation = vec_of(member(pose, "root_t"), "root_t");
    const json& joints = member(pose, "joints");
    if (!joints.is_array()) throw FormatError("field 'joints' must be an array");
    for (const auto& q : joints) req.pose.joint_rotations.push_back(quat_of(q, "joints"));

    if (auto it = j.find("head"); it != j.end() && !it->is_null()) {
        req.head = HeadPose{Rigid::from_quat(quat_of(member(*it, "q"), "q").normalized(), vec_of(member(*it, "t"), "t"))};
    }
    if (auto it = j.find("views"); it != j.end() && !it->is_null()) {
        if (!it->is_array() || it->size() != 2) throw FormatError("field 'views' must hold exactly two views");
        std::array<Rigid, 2> views;
        for (int e = 0; e < 2; ++e) views[e] = Rigid::from_row_major(number_array<12>(member((*it)[e], "T"), "T"));
        req.views = views;
    }
    if (auto it = j.find("K"); it != j.end() && !it->is_null()) {
        ViewParams vp;
        vp.fov_deg = member(*it, "fov").get<double>();
        vp.width = member(*it, "width").get<int>();
        vp.height = member(*it, "height").get<int>();
        req.view_params = vp;
    }
    return req;
}

} // namespace

FrameRequest parse_request(std::string_view text)
{
    try {
        return request_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed request: ") + e.what());
    }
}

std::string serialize_request(const FrameRequest& req)
{
    json joints = json::array();
    for (const auto& q : req.pose.joint_rotations) joints.push_back(quat_json(q));
    json j = {{"frame_id", req.frame_id},
              {"pose",
               {{"root_q", quat_json(req.pose.root_rotation)},
                {"root_t", vec_json(req.pose.root_translation)},
                {"joints", joints}}}};
    if (req.head) {
        j["head"] = {{"q", quat_json(quat_from_matrix(req.head->head_to_world.R))},
                     {"t", vec_json(req.head->head_to_world.t)}};
    }
    if (req.views) {
        j["views"] = json::array();
        for (const auto& v : *req.views) j["views"].push_back({{"T", v.to_row_major()}});
    }
    if (req.view_params) {
        j["K"] = {{"fov", req.view_params->fov_deg}, {"width", req.view_params->width},
                  {"height", req.view_params->height}};
    }
    return j.dump();
}

std::vector<std::uint8_t> serialize_response(const FrameResponse& resp)
{
    std::vector<std::uint8_t> out;
    out.reserve(kResponseHeaderSize + resp.left.size() + resp.right.size());
    out.insert(out.end(), {'G', 'S', 'F', 'R'});
    put<std::uint32_t>(out, kResponseVersion);
    put<std::uint64_t>(out, resp.frame_id);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(resp.status));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(resp.left.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(resp.right.size()));
    put<float>(out, resp.timings.skinning_ms);
    put<float>(out, resp.timings.render_ms);
    put<float>(out, resp.timings.encode_ms);
    out.insert(out.end(), resp.left.begin(), resp.left.end());
    out.insert(out.end(), resp.right.begin(), resp.right.end());
    return out;
}

FrameResponse parse_response(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < kResponseHeaderSize) throw FormatError("response shorter than its header");
    if (std::memcmp(bytes.data(), "GSFR", 4) != 0) throw FormatError("bad response magic");
    std::size_t pos = 4;
    const auto version = get<std::uint32_t>(bytes, pos);
    if (version != kResponseVersion) throw FormatError("unsupported response version " + std::to_string(version));
    FrameResponse resp;
    resp.frame_id = get<std::uint64_t>(bytes, pos);
    const auto status = get<std::uint8_t>(bytes, pos);
    if (status > 2) throw FormatError("unknown response status " + std::to_string(status));
    resp.status = static_cast<FrameStatus>(status);
    const auto len_l = get<std::uint32_t>(bytes, pos);
    const auto len_r = get<std::uint32_t>(bytes, pos);
    resp.timings.skinning_ms = get<float>(bytes, pos);
    resp.timings.render_ms = get<float>(bytes, pos);
    resp.timings.encode_ms = get<float>(bytes, pos);
    if (bytes.size() - kResponseHeaderSize != std::uint64_t(len_l) + len_r)
        throw FormatError("payload lengths do not match the frame size");
    resp.left.assign(bytes.begin() + pos, bytes.begin() + pos + len_l);
    resp.right.assign(bytes.begin() + pos + len_l, bytes.end());
    return resp;
}

FrameResponse error_response(std::uint64_t frame_id, const std::string& message)
{
    FrameResponse resp;
    resp.frame_id = frame_id;
    resp.status = FrameStatus::error;
    resp.left.assign(message.begin(), message.end());
    return resp;
}

std::vector<std::uint8_t> encode_response(std::uint64_t frame_id, const FrameBuffer& left, const FrameBuffer& right,
                                          int quality, const FrameTimings& timings)
{
    FrameResponse resp;
    resp.frame_id = frame_id;
    resp.timings = timings;
    resp.left = encode_jpeg(to_srgb8(left), quality);
    resp.right = encode_jpeg(to_srgb8(right), quality);
    return serialize_response(resp);
}

} // namespace gastream
