#include "gastream/session.hpp"

#include "gastream/errors.hpp"
#include "gastream/image_io.hpp"
#include "gastream/skinning.hpp"

#include <chrono>
#include <exception>

namespace gastream {

namespace {

using Clock = std::chrono::steady_clock;

float ms_since(Clock::time_point start)
{
    return std::chrono::duration<float, std::milli>(Clock::now() - start).count();
}

} // namespace

void validate(const ServerConfig& config)
{
    if (config.resolution <= 0 || config.resolution > kMaxRequestResolution)
        throw ArgumentError("resolution must be in [1, " + std::to_string(kMaxRequestResolution) + "]");
    if (!(config.fov_deg > 0.0 && config.fov_deg < 180.0)) throw ArgumentError("fov must be in (0, 180) degrees");
    if (!(config.ipd > 0.0)) throw ArgumentError("ipd must be positive");
    if (config.jpeg_quality < 1 || config.jpeg_quality > 100) throw ArgumentError("jpeg quality must be in [1, 100]");
}

HeadPose default_head()
{
    // 180 degrees about X: camera +Z (forward) -> world -Z, camera +Y (down) -> world -Y.
    return {Rigid::from_quat(Quat{0.0, 1.0, 0.0, 0.0}, Vec3(0.0, 0.9, 2.2))};
}

StereoCameraPair resolve_cameras(const FrameRequest& req, const ServerConfig& config)
{
    ViewParams vp{config.fov_deg, config.resolution, config.resolution};
    if (req.view_params) vp = *req.view_params;
    if (vp.width <= 0 || vp.height <= 0 || vp.width > kMaxRequestResolution || vp.height > kMaxRequestResolution)
        throw ValidationError("requested resolution is out of range");
    if (!(vp.fov_deg > 0.0 && vp.fov_deg < 180.0)) throw ValidationError("requested fov is out of range");
    const Intrinsics K = intrinsics_from_fov(vp.fov_deg, vp.width, vp.height);

    if (req.views) {
        for (const Rigid& v : *req.views) {
            if (!v.R.allFinite() || !v.t.allFinite() || orthonormality_error(v.R) > 1e-6)
                throw ValidationError("view transform is not a rigid transform");
        }
        return {K, (*req.views)[0], (*req.views)[1]};
    }
    const HeadPose head = req.head ? *req.head : default_head();
    if (!head.head_to_world.t.allFinite() || !head.head_to_world.R.allFinite())
        throw ValidationError("head pose is not finite");
    StereoCameraPair pair = eye_extrinsics(head, config.ipd);
    pair.intrinsics = K;
    return pair;
}

Session::Session(std::shared_ptr<const GaussianAvatar> avatar, ServerConfig config)
    : avatar_(std::move(avatar)), config_(config)
{
    if (!avatar_) throw ArgumentError("session needs an avatar");
    validate(config_);
}

bool Session::claim(std::uint64_t id)
{
    std::uint64_t seen = last_served_.load();
    while (id > seen) {
        if (last_served_.compare_exchange_weak(seen, id)) return true;
    }
    return false;
}

const StereoFrame& Session::render_request(const FrameRequest& req, FrameTimings* timings)
{
    validate_pose(req.pose, avatar_->rig.bone_count());
    StereoRenderJob job;
    job.cameras = resolve_cameras(req, config_);
    job.background = config_.background;
    job.mode = config_.mode;

    auto t0 = Clock::now();
    const Pose pose{req.pose.root_rotation.normalized(), req.pose.root_translation, [&] {
                        auto joints = req.pose.joint_rotations;
                        for (auto& q : joints) q = q.normalized();
                        return joints;
                    }()};
    const PosedGaussians posed = lbs_deform(*avatar_, forward_kinematics(avatar_->rig, pose));
    if (timings) timings->skinning_ms = ms_since(t0);

    t0 = Clock::now();
    job.posed = &posed;
    const StereoFrame* frame = nullptr;
    if (config_.mode == StereoMode::batched) {
        frame = &renderer_.render(job);
    } else {
        sequential_frame_ = render_stereo_sequential(job);
        frame = &sequential_frame_;
    }
    if (timings) timings->render_ms = ms_since(t0);
    ++renders_;
    return *frame;
}

FrameResponse Session::handle_frame(const FrameRequest& req)
{
    std::lock_guard lock(mutex_);
    try {
        validate_pose(req.pose, avatar_->rig.bone_count());
        resolve_cameras(req, config_);
    } catch (const ValidationError& e) {
        return error_response(req.frame_id, e.what());
    } catch (const ArgumentError& e) {
        return error_response(req.frame_id, e.what());
    }

    FrameResponse resp;
    resp.frame_id = req.frame_id;
    if (!claim(req.frame_id)) {
        resp.status = FrameStatus::stale;
        return resp;
    }
    try {
        const StereoFrame& frame = render_request(req, &resp.timings);
        const auto t0 = Clock::now();
        std::vector<std::uint8_t>* out[2] = {&resp.left, &resp.right};
        const FrameBuffer* eyes[2] = {&frame.left, &frame.right};
        std::exception_ptr failure[2];
#pragma omp parallel for num_threads(2) schedule(static, 1)
        for (int e = 0; e < 2; ++e) {
            try {
                *out[e] = encode_jpeg(to_srgb8(*eyes[e]), config_.jpeg_quality);
            } catch (...) {
                failure[e] = std::current_exception();
            }
        }
        for (auto& f : failure)
            if (f) std::rethrow_exception(f);
        resp.timings.encode_ms = ms_since(t0);
    } catch (const std::exception& e) {
        return error_response(req.frame_id, std::string("internal error: ") + e.what());
    }
    return resp;
}

std::vector<std::uint8_t> Session::handle_message(std::string_view text)
{
    FrameRequest req;
    try {
        req = parse_request(text);
    } catch (const FormatError& e) {
        return serialize_response(error_response(0, e.what()));
    }
    return serialize_response(handle_frame(req));
}

} // namespace gastream
