#include "twin/synthetic.hpp"

#include "twin/mesh_io.hpp"
#include "twin/pointcloud.hpp"
#include "twin/scene.hpp"
#include "twin/scene_assets.hpp"
#include "twin/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace twin {

namespace {

namespace fs = std::filesystem;

// std::*_distribution output is implementation-defined; draw from raw engine
// bits so every platform generates the same scene.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    Vec3 unit_vector()
    {
        while (true) {
            const Vec3 v{uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};
            const double n2 = dot(v, v);
            if (n2 > 1e-4 && n2 <= 1.0) return v / std::sqrt(n2);
        }
    }

private:
    std::mt19937_64 engine_;
};

double smoothstep(double u)
{
    u = std::clamp(u, 0.0, 1.0);
    return u * u * (3.0 - 2.0 * u);
}

struct BodyPart {
    Vec3 center;
    Vec3 radii;
    Rgb8 color;
    double share;
};

std::uint8_t jitter(Rng& rng, std::uint8_t c)
{
    const double v = c + rng.uniform(-12.0, 12.0);
    return static_cast<std::uint8_t>(std::clamp(std::floor(v), 0.0, 255.0));
}

PointCloudFrame surgeon_frame(const SyntheticSceneSpec& spec, Rng& rng, int frame)
{
    // Sways from side to side once per clip.
    const double phase = spec.frame_count > 1 ? static_cast<double>(frame) / (spec.frame_count - 1) : 0.0;
    const double tri = 1.0 - std::abs(2.0 * phase - 1.0);
    const double sway = -0.3 + 0.6 * smoothstep(tri);
    const Vec3 base{sway, 0.0, 0.75};
    const double reach = 0.08 * tri;

    const BodyPart parts[] = {
        {{0.0, 1.20, 0.0}, {0.22, 0.35, 0.14}, {70, 140, 150}, 0.35},
        {{0.0, 0.55, 0.0}, {0.18, 0.50, 0.12}, {60, 120, 130}, 0.30},
        {{0.0, 1.72, 0.0}, {0.11, 0.12, 0.11}, {225, 185, 160}, 0.10},
        {{0.0, 1.22, -0.30 - reach}, {0.30, 0.06, 0.22}, {120, 170, 210}, 0.25},
    };

    PointCloudFrame f;
    f.positions.reserve(spec.points_per_frame);
    f.colors.reserve(spec.points_per_frame);
    std::size_t emitted = 0;
    for (std::size_t p = 0; p < std::size(parts); ++p) {
        const BodyPart& part = parts[p];
        const std::size_t n = p + 1 == std::size(parts)
                                  ? spec.points_per_frame - emitted
                                  : static_cast<std::size_t>(part.share * static_cast<double>(spec.points_per_frame));
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3 d = rng.unit_vector();
            const Vec3 pos = base + part.center + Vec3{d.x * part.radii.x, d.y * part.radii.y, d.z * part.radii.z} +
                             Vec3{rng.uniform(-0.004, 0.004), rng.uniform(-0.004, 0.004), rng.uniform(-0.004, 0.004)};
            f.positions.push_back({static_cast<float>(pos.x), static_cast<float>(pos.y), static_cast<float>(pos.z)});
            f.colors.push_back({jitter(rng, part.color.r), jitter(rng, part.color.g), jitter(rng, part.color.b)});
        }
        emitted += n;
    }
    f.bbox = bounds_of(f.positions);

    const Aabb working_volume{{-1.0f, 0.0f, 0.2f}, {1.0f, 2.0f, 1.3f}};
    return voxel_downsample(crop_aabb(f, working_volume), {{0.0, 0.0, 0.0}, spec.voxel_size});
}

Quat rotation_from_z(const Vec3& direction)
{
    const Vec3 z{0.0, 0.0, 1.0};
    const Vec3 a = normalized(direction);
    const Vec3 axis = cross(z, a);
    const double s = norm(axis);
    if (s < 1e-12) return dot(z, a) > 0 ? Quat{} : Quat{0.0, 1.0, 0.0, 0.0};
    return Quat::from_axis_angle(axis, std::atan2(s, dot(z, a)));
}

Trajectory drill_trajectory(const SyntheticSceneSpec& spec)
{
    const Vec3 entry{0.02, 1.05, 0.0};
    const Quat start = rotation_from_z({0.8, -0.6, 0.3});
    const Quat settled = rotation_from_z({0.25, -1.0, -0.15});
    const double end = (spec.frame_count - 1) / spec.anim_fps;
    const double approach_end = spec.approach_fraction * end;

    std::vector<TrajectorySample> samples;
    for (int i = 0; i < spec.frame_count; ++i) {
        const double t = i / spec.anim_fps;
        const double u = approach_end > 0.0 ? std::min(1.0, t / approach_end) : 1.0;
        const double s = smoothstep(u);
        const Quat roll = Quat::from_axis_angle({0.0, 0.0, 1.0}, 0.5 * t);
        const Quat q = slerp(start, settled, s) * roll;
        const Vec3 axis = rotate(q, {0.0, 0.0, 1.0});

        const double r = spec.helix_radius * (1.0 - s);
        const double angle = 2.0 * pi * spec.helix_turns * u;
        Vec3 tip = entry + Vec3{r * std::cos(angle), 0.25 * (1.0 - s), r * std::sin(angle)};
        if (t > approach_end && end > approach_end) {
            tip = tip + axis * (0.02 * (t - approach_end) / (end - approach_end));
        }
        samples.push_back({t, RigidPose(tip - axis * spec.tip_length, q)});
    }
    return Trajectory(std::move(samples));
}

}  // namespace

void generate_synthetic_scene(const SyntheticSceneSpec& spec, const fs::path& out_dir)
{
    if (spec.frame_count < 1) throw std::invalid_argument("frame_count must be at least 1");
    if (!(spec.anim_fps > 0.0)) throw std::invalid_argument("anim_fps must be positive");
    if (!(spec.voxel_size > 0.0)) throw std::invalid_argument("voxel_size must be positive");
    if (!(spec.room.x > 2.2 && spec.room.y > 2.2 && spec.room.z > 2.8)) {
        throw std::invalid_argument("room must be at least 2.2 x 2.2 x 2.8 m to hold the table and surgeon");
    }

    const double hw = spec.room.x / 2.0;
    const double hd = spec.room.z / 2.0;
    write_file(out_dir / "meshes/room.obj", write_obj(make_box({-hw, 0.0, -hd}, {hw, spec.room.y, hd}, {})));
    write_file(out_dir / "meshes/table.obj", write_obj(make_box({-1.0, 0.0, -0.35}, {1.0, 0.9, 0.35}, {})));
    write_file(out_dir / "meshes/anatomy.obj", write_obj(make_box({-0.25, 0.9, -0.15}, {0.25, 1.05, 0.15}, {})));

    Rng rng(spec.seed);
    for (int i = 0; i < spec.frame_count; ++i) {
        write_file(out_dir / expand_frame_uri("frames/{index:06}.spcf", static_cast<std::size_t>(i)),
                   encode_spcf(surgeon_frame(spec, rng, i)));
    }
    write_file(out_dir / "trajectories/drill.strj", encode_strj(drill_trajectory(spec)));

    SceneManifest m;
    m.name = "synthetic-seed-" + std::to_string(spec.seed);
    m.anim_fps = spec.anim_fps;
    m.frame_count = spec.frame_count;
    m.near_clip = 0.05;
    m.default_camera.position = {std::min(1.5, hw - 0.2), std::min(1.85, spec.room.y - 0.2), std::min(1.8, hd - 0.2)};
    // Far clip just beyond the farthest room corner, rounded up to 0.5 m.
    double farthest = 0.0;
    for (int i = 0; i < 8; ++i) {
        const Vec3 corner{(i & 1) ? hw : -hw, (i & 2) ? spec.room.y : 0.0, (i & 4) ? hd : -hd};
        farthest = std::max(farthest, norm(corner - m.default_camera.position));
    }
    m.far_clip = std::ceil(farthest * 2.0) / 2.0;
    m.default_camera.look_at = {0.0, 1.0, 0.2};
    m.entities = {
        {"room", EntityKind::mesh, "meshes/room.obj", "", {170, 175, 180}, 0.0, true},
        {"table", EntityKind::mesh, "meshes/table.obj", "", {90, 110, 140}, 0.0, true},
        {"anatomy", EntityKind::mesh, "meshes/anatomy.obj", "", {205, 150, 130}, 0.0, true},
        {"surgeon", EntityKind::pointcloud_sequence, "", "frames/{index:06}.spcf", {}, 0.0, true},
        {"drill", EntityKind::instrument, "trajectories/drill.strj", "", {215, 215, 225}, spec.tip_length, true},
    };
    check_manifest(m);
    write_file(out_dir / manifest_filename, serialize_manifest(m));
}

}  // namespace twin
