#include "gastream/avatar.hpp"

#include "gastream/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

namespace gastream {

namespace {

constexpr std::array<char, 4> kMagic = {'G', 'S', 'A', 'V'};
constexpr std::uint32_t kVersion = 1;
constexpr double kQuatTolerance = 1e-6;
constexpr double kRenormalizeThreshold = 1e-6;

class ByteWriter {
public:
    void bytes(const void* data, std::size_t n)
    {
        const auto* p = static_cast<const std::uint8_t*>(data);
        out_.insert(out_.end(), p, p + n);
    }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v)
    {
        out_.push_back(static_cast<std::uint8_t>(v));
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
    }
    void u32(std::uint32_t v)
    {
        for (int s = 0; s < 32; s += 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

    void need(std::size_t n) const
    {
        if (in_.size() - pos_ < n) throw FormatError("avatar container truncated");
    }
    std::uint8_t u8()
    {
        need(1);
        return in_[pos_++];
    }
    std::uint16_t u16()
    {
        need(2);
        const auto v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    std::uint32_t u32()
    {
        need(4);
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(in_[pos_ + b]) << (8 * b);
        pos_ += 4;
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    float f32() { return std::bit_cast<float>(u32()); }
    std::size_t remaining() const { return in_.size() - pos_; }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

bool finite3(const std::array<float, 3>& v)
{
    return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

std::string splat_msg(std::size_t i, const std::string& what)
{
    return "splat " + std::to_string(i) + ": " + what;
}

std::string bone_msg(std::size_t k, const std::string& what)
{
    return "bone " + std::to_string(k) + ": " + what;
}

void normalize_quaternion(std::array<float, 4>& r, std::size_t i)
{
    const double n = std::sqrt(double(r[0]) * r[0] + double(r[1]) * r[1] + double(r[2]) * r[2] +
                               double(r[3]) * r[3]);
    if (!std::isfinite(n) || n < kQuatTolerance) throw ValidationError(splat_msg(i, "degenerate rotation quaternion"), i);
    if (std::abs(n - 1.0) > kRenormalizeThreshold) {
        for (auto& c : r) c = static_cast<float>(c / n);
    }
}

void normalize_weights(std::array<Influence, kMaxInfluences>& row, std::size_t i, std::size_t bones)
{
    double sum = 0.0;
    for (auto& inf : row) {
        if (inf.bone == kNoBone) {
            if (inf.weight != 0.0f) throw ValidationError(splat_msg(i, "padding slot carries weight"), i);
            continue;
        }
        if (inf.bone >= bones) throw ValidationError(splat_msg(i, "bone index out of range"), i);
        if (!std::isfinite(inf.weight) || inf.weight < -kWeightTolerance)
            throw ValidationError(splat_msg(i, "negative or non-finite skin weight"), i);
        if (inf.weight < 0.0f) inf.weight = 0.0f;
        sum += inf.weight;
    }
    if (!(sum > 0.0)) throw ValidationError(splat_msg(i, "skin weights sum to zero"), i);
    if (std::abs(sum - 1.0) > kRenormalizeThreshold) {
        for (auto& inf : row) {
            if (inf.bone != kNoBone) inf.weight = static_cast<float>(inf.weight / sum);
        }
    }
}

} // namespace

Mat3 GaussianSet::covariance(std::size_t i) const
{
    const Mat3 R = rotation(i).to_matrix();
    const auto& s = scales[i];
    const Vec3 var(double(s[0]) * s[0], double(s[1]) * s[1], double(s[2]) * s[2]);
    return R * var.asDiagonal() * R.transpose();
}

Rigid Rig::rest(std::size_t k) const
{
    std::array<double, 12> m{};
    std::copy(rest_global[k].begin(), rest_global[k].end(), m.begin());
    return Rigid::from_row_major(m);
}

Pose Pose::identity(std::size_t bone_count)
{
    Pose p;
    p.joint_rotations.assign(bone_count > 0 ? bone_count - 1 : 0, Quat::identity());
    return p;
}

void validate_pose(const Pose& pose, std::size_t bone_count)
{
    if (bone_count == 0 || pose.joint_rotations.size() != bone_count - 1) {
        throw ValidationError("pose has " + std::to_string(pose.joint_rotations.size()) +
                              " joint rotations, rig expects " + std::to_string(bone_count ? bone_count - 1 : 0));
    }
    auto unit = [](const Quat& q) { return std::abs(q.norm() - 1.0) <= kQuatTolerance; };
    if (!unit(pose.root_rotation)) throw ValidationError("root rotation is not a unit quaternion");
    if (!pose.root_translation.allFinite()) throw ValidationError("root translation is not finite");
    for (std::size_t k = 0; k < pose.joint_rotations.size(); ++k) {
        if (!unit(pose.joint_rotations[k]))
            throw ValidationError("joint rotation " + std::to_string(k) + " is not a unit quaternion", k);
    }
}

void normalize_and_validate(GaussianAvatar& avatar)
{
    auto& g = avatar.gaussians;
    auto& rig = avatar.rig;
    const std::size_t n = g.count();
    const std::size_t bones = rig.bone_count();

    if (g.sh_degree < 0 || g.sh_degree > 3) throw ValidationError("sh degree must be in [0, 3]");
    if (g.scales.size() != n || g.rotations.size() != n || g.opacities.size() != n ||
        g.sh.size() != n * static_cast<std::size_t>(g.coeffs_per_splat()) * 3) {
        throw ValidationError("gaussian attribute arrays disagree on splat count");
    }
    if (avatar.weights.count() != n) throw ValidationError("skin weight rows do not match splat count");

    if (bones == 0) throw ValidationError("rig has no bones");
    if (rig.rest_global.size() != bones) throw ValidationError("rig rest transforms do not match bone count");
    if (rig.names.empty()) {
        rig.names.resize(bones);
        for (std::size_t k = 0; k < bones; ++k) rig.names[k] = "bone_" + std::to_string(k);
    }
    if (rig.names.size() != bones) throw ValidationError("rig names do not match bone count");
    if (rig.parents[0] != -1) throw ValidationError(bone_msg(0, "bone 0 must be the root"), 0);
    for (std::size_t k = 1; k < bones; ++k) {
        if (rig.parents[k] < 0 || static_cast<std::size_t>(rig.parents[k]) >= k)
            throw ValidationError(bone_msg(k, "parent must precede child and only bone 0 may be a root"), k);
    }
    for (std::size_t k = 0; k < bones; ++k) {
        for (float v : rig.rest_global[k]) {
            if (!std::isfinite(v)) throw ValidationError(bone_msg(k, "non-finite rest transform"), k);
        }
        if (orthonormality_error(rig.rest(k).R) > 1e-6)
            throw ValidationError(bone_msg(k, "rest rotation is not orthonormal"), k);
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (!finite3(g.positions[i])) throw ValidationError(splat_msg(i, "non-finite position"), i);
        for (float s : g.scales[i]) {
            if (!(s > 0.0f) || !std::isfinite(s)) throw ValidationError(splat_msg(i, "scale must be strictly positive"), i);
        }
        normalize_quaternion(g.rotations[i], i);
        const float o = g.opacities[i];
        if (!(o >= 0.0f && o <= 1.0f)) throw ValidationError(splat_msg(i, "opacity outside [0, 1]"), i);
        for (float c : g.sh_of(i)) {
            if (!std::isfinite(c)) throw ValidationError(splat_msg(i, "non-finite SH coefficient"), i);
        }
        normalize_weights(avatar.weights.rows[i], i, bones);
    }
}

std::vector<std::uint8_t> serialize_avatar(const GaussianAvatar& avatar)
{
    const auto& g = avatar.gaussians;
    const auto& rig = avatar.rig;
    ByteWriter w;
    w.bytes(kMagic.data(), kMagic.size());
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(g.count()));
    w.u32(static_cast<std::uint32_t>(rig.bone_count()));
    w.u8(static_cast<std::uint8_t>(g.sh_degree));
    for (const auto& p : g.positions) for (float v : p) w.f32(v);
    for (const auto& s : g.scales) for (float v : s) w.f32(v);
    for (const auto& r : g.rotations) for (float v : r) w.f32(v);
    for (float o : g.opacities) w.f32(o);
    for (float c : g.sh) w.f32(c);
    for (auto p : rig.parents) w.i32(p);
    for (const auto& m : rig.rest_global) for (float v : m) w.f32(v);
    for (const auto& row : avatar.weights.rows) {
        for (const auto& inf : row) {
            w.u16(inf.bone);
            w.f32(inf.weight);
        }
    }
    return w.take();
}

GaussianAvatar deserialize_avatar(std::span<const std::uint8_t> bytes)
{
    ByteReader r(bytes);
    std::array<char, 4> magic{};
    for (auto& c : magic) c = static_cast<char>(r.u8());
    if (magic != kMagic) throw FormatError("not an avatar container (bad magic)");
    const auto version = r.u32();
    if (version != kVersion) throw FormatError("unsupported avatar container version " + std::to_string(version));
    const std::size_t n = r.u32();
    const std::size_t bones = r.u32();
    const int degree = r.u8();
    if (degree > 3) throw FormatError("SH degree " + std::to_string(degree) + " exceeds 3");

    const std::size_t coeffs = static_cast<std::size_t>(sh_coeff_count(degree));
    const std::size_t expected =
        n * (3 + 3 + 4 + 1 + coeffs * 3) * 4 + bones * (4 + 12 * 4) + n * kMaxInfluences * 6;
    if (r.remaining() != expected) {
        throw FormatError("avatar container size mismatch: header implies " + std::to_string(expected) +
                          " payload bytes, found " + std::to_string(r.remaining()));
    }

    GaussianAvatar a;
    auto& g = a.gaussians;
    g.sh_degree = degree;
    g.positions.resize(n);
    g.scales.resize(n);
    g.rotations.resize(n);
    g.opacities.resize(n);
    g.sh.resize(n * coeffs * 3);
    for (auto& p : g.positions) for (auto& v : p) v = r.f32();
    for (auto& s : g.scales) for (auto& v : s) v = r.f32();
    for (auto& q : g.rotations) for (auto& v : q) v = r.f32();
    for (auto& o : g.opacities) o = r.f32();
    for (auto& c : g.sh) c = r.f32();

    a.rig.parents.resize(bones);
    a.rig.rest_global.resize(bones);
    for (auto& p : a.rig.parents) p = r.i32();
    for (auto& m : a.rig.rest_global) for (auto& v : m) v = r.f32();

    a.weights.rows.resize(n);
    for (auto& row : a.weights.rows) {
        for (auto& inf : row) {
            inf.bone = r.u16();
            inf.weight = r.f32();
        }
    }
    normalize_and_validate(a);
    return a;
}

GaussianAvatar load_avatar(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open avatar file " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto avatar = deserialize_avatar(bytes);
    avatar.metadata.name = path.stem().string();
    return avatar;
}

void save_avatar(const GaussianAvatar& avatar, const std::filesystem::path& path)
{
    const auto bytes = serialize_avatar(avatar);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write avatar file " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("short write to " + path.string());
}

// ---------------------------------------------------------------------------
// Procedural avatar

namespace {

// Uniform double in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

    // Shoemake's uniform random rotation.
    Quat rotation()
    {
        const double u1 = uniform(), u2 = uniform(), u3 = uniform();
        const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
        constexpr double two_pi = 6.283185307179586;
        return {a * std::sin(two_pi * u2), a * std::cos(two_pi * u2), b * std::sin(two_pi * u3), b * std::cos(two_pi * u3)};
    }

    Vec3 in_unit_ball()
    {
        for (;;) {
            const Vec3 v(uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0));
            if (v.squaredNorm() <= 1.0) return v;
        }
    }

private:
    std::mt19937_64 engine_;
};

struct Limb {
    Vec3 direction;
    double length;
    double radius;
};

// Spine, two arms, two legs; bones after the root are dealt round-robin onto the limbs.
const std::array<Limb, 5> kLimbs = {{
    {{0.0, 1.0, 0.0}, 0.75, 0.11},
    {{1.0, 0.15, 0.0}, 0.70, 0.045},
    {{-1.0, 0.15, 0.0}, 0.70, 0.045},
    {{0.2, -1.0, 0.0}, 0.90, 0.065},
    {{-0.2, -1.0, 0.0}, 0.90, 0.065},
}};

double segment_distance(const Vec3& x, const Vec3& a, const Vec3& b)
{
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double u = len2 > 0.0 ? std::clamp((x - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (x - (a + u * ab)).norm();
}

std::array<float, 3> to_f3(const Vec3& v)
{
    return {static_cast<float>(v.x()), static_cast<float>(v.y()), static_cast<float>(v.z())};
}

} // namespace

GaussianAvatar synth_avatar(const SynthSpec& spec)
{
    if (spec.splat_count == 0) throw ArgumentError("synth_avatar: splat_count must be at least 1");
    if (spec.bone_count == 0) throw ArgumentError("synth_avatar: bone_count must be at least 1");
    if (spec.bone_count >= kNoBone) throw ArgumentError("synth_avatar: bone_count too large");
    if (spec.sh_degree < 0 || spec.sh_degree > 3) throw ArgumentError("synth_avatar: sh_degree must be in [0, 3]");

    Rng rng(spec.seed);
    const std::size_t bones = spec.bone_count;
    const std::size_t n = spec.splat_count;

    // Skeleton joints. joint[k] is the head of bone k's capsule; its tail is the parent joint.
    std::array<std::size_t, kLimbs.size()> per_limb{};
    for (std::size_t k = 1; k < bones; ++k) ++per_limb[(k - 1) % kLimbs.size()];

    GaussianAvatar a;
    a.metadata.name = "synth-" + std::to_string(spec.seed);
    auto& rig = a.rig;
    rig.parents.resize(bones);
    rig.rest_global.resize(bones);
    rig.names.resize(bones);

    std::vector<Vec3> joint(bones);
    std::vector<double> radius(bones);
    std::array<std::int32_t, kLimbs.size()> tip{};
    joint[0] = Vec3(0.0, 0.95, 0.0);
    radius[0] = 0.10;
    rig.parents[0] = -1;
    for (std::size_t k = 1; k < bones; ++k) {
        const std::size_t limb = (k - 1) % kLimbs.size();
        const auto& L = kLimbs[limb];
        const Vec3 jitter(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1));
        const Vec3 dir = (L.direction.normalized() + jitter).normalized();
        const std::int32_t parent = (k - 1) < kLimbs.size() ? 0 : tip[limb];
        rig.parents[k] = parent;
        joint[k] = joint[static_cast<std::size_t>(parent)] + dir * (L.length / static_cast<double>(per_limb[limb]));
        radius[k] = L.radius;
        tip[limb] = static_cast<std::int32_t>(k);
    }
    for (std::size_t k = 0; k < bones; ++k) {
        const Mat3 R = rng.rotation().to_matrix();
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) rig.rest_global[k][i * 4 + j] = static_cast<float>(R(i, j));
            rig.rest_global[k][i * 4 + 3] = static_cast<float>(joint[k](i));
        }
        rig.names[k] = "bone_" + std::to_string(k);
    }

    std::vector<Vec3> tone(bones);
    for (auto& c : tone) c = Vec3(rng.uniform(0.2, 0.9), rng.uniform(0.2, 0.9), rng.uniform(0.2, 0.9));

    auto& g = a.gaussians;
    g.sh_degree = spec.sh_degree;
    const std::size_t coeffs = static_cast<std::size_t>(g.coeffs_per_splat());
    g.positions.resize(n);
    g.scales.resize(n);
    g.rotations.resize(n);
    g.opacities.resize(n);
    g.sh.resize(n * coeffs * 3);
    a.weights.rows.resize(n);

    const double base_scale = std::clamp(0.008 * std::sqrt(50000.0 / static_cast<double>(n)), 0.004, 0.05);
    constexpr double kSh0 = 0.28209479177387814;
    constexpr double kFalloff = 0.04;

    std::vector<std::pair<double, std::size_t>> dist(bones);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t b = rng.index(bones);
        const Vec3 tail = b == 0 ? joint[0] : joint[static_cast<std::size_t>(rig.parents[b])];
        const Vec3 x = tail + rng.uniform() * (joint[b] - tail) + radius[b] * rng.in_unit_ball();
        g.positions[i] = to_f3(x);
        g.scales[i] = to_f3(Vec3(rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5)) * base_scale);
        const Quat q = rng.rotation();
        g.rotations[i] = {static_cast<float>(q.w), static_cast<float>(q.x), static_cast<float>(q.y), static_cast<float>(q.z)};
        g.opacities[i] = static_cast<float>(rng.uniform(0.4, 1.0));

        float* sh = g.sh.data() + i * coeffs * 3;
        for (int c = 0; c < 3; ++c) {
            const double albedo = std::clamp(tone[b](c) + rng.uniform(-0.08, 0.08), 0.0, 1.0);
            sh[c] = static_cast<float>((albedo - 0.5) / kSh0);
        }
        for (std::size_t j = 3; j < coeffs * 3; ++j) sh[j] = static_cast<float>(rng.uniform(-0.1, 0.1));

        for (std::size_t k = 0; k < bones; ++k) {
            const Vec3 head = joint[k];
            const Vec3 ktail = k == 0 ? joint[0] : joint[static_cast<std::size_t>(rig.parents[k])];
            dist[k] = {segment_distance(x, ktail, head), k};
        }
        const std::size_t keep = std::min<std::size_t>(4, bones);
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(keep), dist.end());
        std::array<double, kMaxInfluences> w{};
        double sum = 0.0;
        for (std::size_t j = 0; j < keep; ++j) {
            const double d = dist[j].first - dist[0].first;
            w[j] = std::exp(-d * d / (2.0 * kFalloff * kFalloff));
            sum += w[j];
        }
        auto& row = a.weights.rows[i];
        std::size_t slot = 0;
        for (std::size_t j = 0; j < keep; ++j) {
            const double wj = w[j] / sum;
            if (wj < 1e-3) continue;
            row[slot++] = {static_cast<std::uint16_t>(dist[j].second), static_cast<float>(wj)};
        }
    }

    normalize_and_validate(a);
    return a;
}

} // namespace gastream
