#include "twin/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace twin {

RigidPose::RigidPose(const Vec3& translation, const Quat& rotation) : translation_(translation), rotation_(rotation)
{
    const double len = rotation.length();
    if (!std::isfinite(len) || len == 0.0) {
        throw std::invalid_argument("rotation quaternion must be finite and non-zero");
    }
    if (std::abs(len - 1.0) > 1e-6) {
        rotation_ = {rotation.w / len, rotation.x / len, rotation.y / len, rotation.z / len};
    }
}

RigidPose RigidPose::inverse() const
{
    const Quat inv = rotation_.conjugate();
    return RigidPose(-rotate(inv, translation_), inv);
}

RigidPose RigidPose::operator*(const RigidPose& other) const
{
    return RigidPose(rotate(rotation_, other.translation_) + translation_, rotation_ * other.rotation_);
}

Trajectory::Trajectory(std::vector<TrajectorySample> samples) : samples_(std::move(samples))
{
    if (samples_.empty()) {
        throw std::invalid_argument("trajectory needs at least one sample");
    }
    for (std::size_t i = 1; i < samples_.size(); ++i) {
        if (!(samples_[i].time > samples_[i - 1].time)) {
            throw std::invalid_argument("timestamps must be strictly increasing (sample " + std::to_string(i) + ")");
        }
    }
}

Quat slerp(const Quat& a, const Quat& b_in, double t)
{
    Quat b = b_in;
    double c = quat_dot(a, b);
    if (c < 0.0) {
        b = -b;
        c = -c;
    }
    double wa;
    double wb;
    if (c > 0.9995) {
        // Nearly parallel: normalized lerp avoids dividing by sin(theta) ~ 0.
        wa = 1.0 - t;
        wb = t;
    } else {
        const double theta = std::acos(c);
        const double s = std::sin(theta);
        wa = std::sin((1.0 - t) * theta) / s;
        wb = std::sin(t * theta) / s;
    }
    Quat q{wa * a.w + wb * b.w, wa * a.x + wb * b.x, wa * a.y + wb * b.y, wa * a.z + wb * b.z};
    const double len = q.length();
    return {q.w / len, q.x / len, q.y / len, q.z / len};
}

RigidPose sample_pose(const Trajectory& trajectory, double time)
{
    const auto& s = trajectory.samples();
    if (time <= s.front().time) return s.front().pose;
    if (time >= s.back().time) return s.back().pose;

    // First sample strictly after time; its predecessor is at or before time.
    auto hi = std::upper_bound(s.begin(), s.end(), time, [](double t, const TrajectorySample& x) { return t < x.time; });
    auto lo = hi - 1;
    if (lo->time == time) return lo->pose;

    const double alpha = (time - lo->time) / (hi->time - lo->time);
    const Vec3& ta = lo->pose.translation();
    const Vec3& tb = hi->pose.translation();
    return RigidPose(ta + (tb - ta) * alpha, slerp(lo->pose.rotation(), hi->pose.rotation(), alpha));
}

Vec3 tool_axis(const RigidPose& pose) { return rotate(pose.rotation(), Vec3{0.0, 0.0, 1.0}); }

Vec3 tool_tip(const RigidPose& pose, double tip_length) { return pose.translation() + tip_length * tool_axis(pose); }

PoseDelta compare_poses(const RigidPose& expert, const RigidPose& user, double tip_length)
{
    const Vec3 d = tool_tip(expert, tip_length) - tool_tip(user, tip_length);
    const double c = std::clamp(dot(tool_axis(expert), tool_axis(user)), -1.0, 1.0);
    return {norm(d) * 1000.0, rad_to_deg(std::acos(c))};
}

Bytes encode_strj(const Trajectory& trajectory)
{
    const auto& samples = trajectory.samples();
    Bytes out;
    out.reserve(strj_header_size + samples.size() * strj_bytes_per_sample);
    ByteWriter w(out);
    w.tag("STR1");
    w.u32(static_cast<std::uint32_t>(samples.size()));
    for (const auto& s : samples) {
        w.f64(s.time);
        const Vec3& t = s.pose.translation();
        const Quat& q = s.pose.rotation();
        w.f32(static_cast<float>(t.x));
        w.f32(static_cast<float>(t.y));
        w.f32(static_cast<float>(t.z));
        w.f32(static_cast<float>(q.w));
        w.f32(static_cast<float>(q.x));
        w.f32(static_cast<float>(q.y));
        w.f32(static_cast<float>(q.z));
    }
    return out;
}

Trajectory decode_strj(ByteView bytes)
{
    ByteReader r(bytes);
    if (!r.match("STR1")) {
        throw FormatError("bad magic: not an STRJ trajectory");
    }
    if (bytes.size() < strj_header_size) {
        throw FormatError("truncated STRJ header: expected " + std::to_string(strj_header_size) + " bytes, got " +
                          std::to_string(bytes.size()));
    }
    const std::uint32_t count = r.read<std::uint32_t>();
    const std::size_t expected = strj_header_size + std::size_t{count} * strj_bytes_per_sample;
    if (bytes.size() != expected) {
        throw FormatError(std::string(bytes.size() < expected ? "truncated" : "oversized") +
                          " STRJ payload: expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(bytes.size()));
    }
    if (count == 0) {
        throw FormatError("STRJ trajectory has no samples");
    }

    std::vector<TrajectorySample> samples;
    samples.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const double time = r.read<double>();
        if (!std::isfinite(time)) {
            throw FormatError("non-finite timestamp at sample " + std::to_string(i));
        }
        if (!samples.empty() && !(time > samples.back().time)) {
            throw FormatError("timestamps must be strictly increasing (sample " + std::to_string(i) + ")");
        }
        Vec3 t;
        t.x = r.read<float>();
        t.y = r.read<float>();
        t.z = r.read<float>();
        Quat q;
        q.w = r.read<float>();
        q.x = r.read<float>();
        q.y = r.read<float>();
        q.z = r.read<float>();
        try {
            samples.push_back({time, RigidPose(t, q)});
        } catch (const std::invalid_argument& e) {
            throw FormatError("sample " + std::to_string(i) + ": " + e.what());
        }
    }
    return Trajectory(std::move(samples));
}

}  // namespace twin
