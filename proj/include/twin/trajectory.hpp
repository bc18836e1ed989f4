#pragma once

#include "twin/bytes.hpp"
#include "twin/math.hpp"

#include <vector>

namespace twin {

/// Rigid transform: rotate, then translate. Meters and (w, x, y, z).
class RigidPose {
public:
    RigidPose() = default;

    /// Normalizes the quaternion unless it is already unit within 1e-6, so that
    /// single-precision samples survive a decode/encode cycle bit-exactly.
    /// Throws std::invalid_argument for a zero or non-finite quaternion.
    RigidPose(const Vec3& translation, const Quat& rotation);

    const Vec3& translation() const { return translation_; }
    const Quat& rotation() const { return rotation_; }

    Vec3 transform_point(const Vec3& p) const { return rotate(rotation_, p) + translation_; }
    RigidPose inverse() const;

    /// Composition: (a * b).transform_point(p) == a.transform_point(b.transform_point(p)).
    RigidPose operator*(const RigidPose& other) const;

    friend bool operator==(const RigidPose&, const RigidPose&) = default;

private:
    Vec3 translation_;
    Quat rotation_;
};

inline Vec3 transform_point(const RigidPose& pose, const Vec3& p) { return pose.transform_point(p); }

struct TrajectorySample {
    double time = 0.0;  // seconds
    RigidPose pose;

    friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

/// Timestamped instrument poses; at least one sample, strictly increasing times.
class Trajectory {
public:
    /// Throws std::invalid_argument if empty or not strictly increasing.
    explicit Trajectory(std::vector<TrajectorySample> samples);

    const std::vector<TrajectorySample>& samples() const { return samples_; }
    double start_time() const { return samples_.front().time; }
    double end_time() const { return samples_.back().time; }

    friend bool operator==(const Trajectory&, const Trajectory&) = default;

private:
    std::vector<TrajectorySample> samples_;
};

/// Shortest-arc spherical interpolation, t in [0, 1].
Quat slerp(const Quat& a, const Quat& b, double t);

/// Pose at an arbitrary time; clamps to the end samples outside the recorded
/// range, otherwise lerps translation and slerps rotation between neighbours.
RigidPose sample_pose(const Trajectory& trajectory, double time);

struct PoseDelta {
    double tip_distance_mm = 0.0;
    double axis_angle_deg = 0.0;
};

/// Tool axis is local +Z, tip = translation + tip_length * axis. Roll about the
/// axis does not contribute.
Vec3 tool_axis(const RigidPose& pose);
Vec3 tool_tip(const RigidPose& pose, double tip_length);
PoseDelta compare_poses(const RigidPose& expert, const RigidPose& user, double tip_length);

// STRJ layout (little-endian): "STR1" | u32 count | count * (f64 t, f32 txyz, f32 qwxyz)
inline constexpr std::size_t strj_header_size = 8;
inline constexpr std::size_t strj_bytes_per_sample = 36;

Bytes encode_strj(const Trajectory& trajectory);

/// Throws FormatError on bad magic, truncation, bad quaternions, or
/// non-increasing timestamps.
Trajectory decode_strj(ByteView bytes);

}  // namespace twin
