#include "twin/commands.hpp"

#include "twin/playback.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace twin {

namespace fs = std::filesystem;
using nlohmann::json;

ConvertResult cmd_convert(const ConvertOptions& options)
{
    if (options.inputs.empty()) throw CommandError("convert: no input PLY files");
    if (options.voxel_size && !(*options.voxel_size > 0.0)) throw CommandError("convert: --voxel-size must be positive");

    ConvertResult result;
    std::vector<Bytes> encoded;
    std::string errors;
    for (const fs::path& input : options.inputs) {
        try {
            PointCloudFrame f = import_ply(read_file(input));
            result.points_in.push_back(f.size());
            if (options.crop) f = crop_aabb(f, *options.crop);
            if (options.voxel_size) f = voxel_downsample(f, {options.voxel_origin, *options.voxel_size});
            result.points_out.push_back(f.size());
            encoded.push_back(encode_spcf(f));
        } catch (const std::exception& e) {
            errors += "\n  " + input.string() + ": " + e.what();
        }
    }
    if (!errors.empty()) throw CommandError("convert failed:" + errors);

    SceneManifest m;
    m.name = options.name;
    m.anim_fps = options.anim_fps;
    m.frame_count = static_cast<int>(encoded.size());
    m.entities.push_back({"surgeon", EntityKind::pointcloud_sequence, "", "frames/{index:06}.spcf", {}, 0.0, true});
    check_manifest(m);

    for (std::size_t i = 0; i < encoded.size(); ++i) {
        write_file(options.out_dir / expand_frame_uri(m.entities.front().uri_pattern, i), encoded[i]);
    }
    write_file(options.out_dir / manifest_filename, serialize_manifest(m));
    return result;
}

Eye parse_eye(const std::string& s)
{
    if (s == "mono") return Eye::mono;
    if (s == "left") return Eye::left;
    if (s == "right") return Eye::right;
    if (s == "stereo") return Eye::stereo;
    throw CommandError("unknown eye \"" + s + "\" (expected mono, left, right or stereo)");
}

double render_time(const RenderOptions& options, const SceneManifest& manifest)
{
    if (options.time && options.frame) throw CommandError("render: use either --time or --frame, not both");
    if (options.frame) return std::max(0, *options.frame) / manifest.anim_fps;
    if (options.time) {
        if (!std::isfinite(*options.time)) throw CommandError("render: --time must be finite");
        return std::max(0.0, *options.time);
    }
    return 0.0;
}

RgbImage render_scene_image(const SceneAssets& assets, const RenderOptions& options)
{
    const SceneManifest& m = assets.manifest;
    const double time = render_time(options, m);

    PlaybackState state = make_playback_state(m);
    for (const std::string& id : options.hide) {
        try {
            state = set_visibility(std::move(state), id, false);
        } catch (const UnknownEntityError& e) {
            throw CommandError(std::string("render: ") + e.what());
        }
    }

    CameraConfig cfg = m.default_camera;
    if (options.width) cfg.image_width = *options.width;
    if (options.height) cfg.image_height = *options.height;
    if (options.fov) cfg.vertical_fov = *options.fov;
    const double ipd = options.ipd.value_or(cfg.ipd);
    PinholeCamera camera;
    try {
        camera = PinholeCamera::from_config(cfg, options.near.value_or(m.near_clip), options.far.value_or(m.far_clip));
    } catch (const std::invalid_argument& e) {
        throw CommandError(std::string("render: ") + e.what());
    }

    std::optional<PointCloudFrame> points;
    if (state.is_visible(m.pointcloud().id)) {
        const std::size_t index = options.frame
                                      ? static_cast<std::size_t>(std::clamp(*options.frame, 0, m.frame_count - 1))
                                      : frame_index_at(time, m.anim_fps, m.frame_count, false);
        const DirectoryFrameStore store = assets.frame_store();
        try {
            points = decode_spcf(store.load(index));
        } catch (const FormatError& e) {
            throw FrameLoadError(index, e.what());
        }
    }
    const RenderScene scene = compose_scene(assets, state, time, points ? &*points : nullptr);

    switch (options.eye) {
    case Eye::mono: return render_mono(scene, camera, options.workers);
    case Eye::left: return render_mono(scene, camera.shifted(-ipd / 2.0), options.workers);
    case Eye::right: return render_mono(scene, camera.shifted(ipd / 2.0), options.workers);
    case Eye::stereo: return render_stereo(scene, camera, ipd, options.workers);
    }
    return {};
}

RgbImage cmd_render(const RenderOptions& options, const fs::path& out)
{
    const SceneAssets assets = SceneAssets::load(options.scene);
    RgbImage image = render_scene_image(assets, options);
    write_file(out, write_ppm(image));
    return image;
}

namespace {

json report_json(const LoaderReport& r)
{
    return {{"frames", r.frames},
            {"stall_count", r.stall_count},
            {"loads_issued", r.loads_issued},
            {"blocked_ms", r.blocked_seconds * 1000.0},
            {"elapsed_ms", r.elapsed_seconds * 1000.0}};
}

std::string format_ms(double seconds)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f ms", seconds * 1000.0);
    return buf;
}

}  // namespace

std::string BenchResult::to_json() const
{
    json j;
    j["clock"] = clock;
    j["latency_ms"] = latency_ms;
    j["frame_period_ms"] = frame_period_ms;
    j["sync"] = sync ? report_json(*sync) : json(nullptr);
    j["async"] = async ? report_json(*async) : json(nullptr);
    j["speedup"] = speedup ? json(*speedup) : json(nullptr);
    return j.dump(2) + "\n";
}

std::string BenchResult::to_text() const
{
    std::ostringstream out;
    out << "loader benchmark (" << clock << " clock, latency " << latency_ms << " ms, frame period "
        << frame_period_ms << " ms)\n";
    auto line = [&](const char* name, const LoaderReport& r) {
        out << "  " << name << ": " << r.frames << " frames, " << r.stall_count << " stalls, "
            << format_ms(r.blocked_seconds) << " blocked, " << format_ms(r.elapsed_seconds) << " elapsed\n";
    };
    if (sync) line("sync ", *sync);
    if (async) line("async", *async);
    if (speedup) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "  loading-time speedup: %.1fx\n", *speedup);
        out << buf;
    }
    return out.str();
}

BenchResult cmd_bench_loader(const BenchOptions& options)
{
    if (!(options.latency_ms >= 0.0)) throw CommandError("bench-loader: --latency must be non-negative");
    const SceneAssets assets = SceneAssets::load(options.scene);
    const SceneManifest& m = assets.manifest;
    const DirectoryFrameStore store = assets.frame_store();

    LoaderRunConfig cfg;
    cfg.frames = options.frames.value_or(static_cast<std::size_t>(m.frame_count));
    cfg.frames = std::min(cfg.frames, static_cast<std::size_t>(m.frame_count));
    cfg.latency_seconds = options.latency_ms / 1000.0;
    cfg.frame_period_seconds = 1.0 / m.anim_fps;

    const auto latency = std::chrono::microseconds(std::llround(options.latency_ms * 1000.0));
    const LatencyFrameStore slow(store, latency);

    auto run = [&](bool prefetch) {
        LoaderRunConfig c = cfg;
        c.prefetch = prefetch;
        return options.virtual_clock ? simulate_loader(store, c) : run_realtime_loader(slow, c);
    };

    BenchResult result;
    result.clock = options.virtual_clock ? "virtual" : "real";
    result.latency_ms = options.latency_ms;
    result.frame_period_ms = cfg.frame_period_seconds * 1000.0;
    if (options.mode != BenchMode::async) result.sync = run(false);
    if (options.mode != BenchMode::sync) result.async = run(true);
    if (result.sync && result.async && result.async->blocked_seconds > 0.0) {
        result.speedup = result.sync->blocked_seconds / result.async->blocked_seconds;
    }
    return result;
}

RigidPose parse_pose_string(const std::string& text)
{
    std::istringstream in(text);
    in.imbue(std::locale::classic());
    double v[7];
    for (double& x : v) {
        if (!(in >> x) || !std::isfinite(x)) {
            throw CommandError("malformed pose \"" + text + "\": expected \"tx ty tz qw qx qy qz\"");
        }
    }
    std::string rest;
    if (in >> rest) throw CommandError("malformed pose \"" + text + "\": expected exactly 7 numbers");
    try {
        return RigidPose({v[0], v[1], v[2]}, {v[3], v[4], v[5], v[6]});
    } catch (const std::invalid_argument& e) {
        throw CommandError("malformed pose \"" + text + "\": " + e.what());
    }
}

namespace {

json pose_json(const RigidPose& p)
{
    const Vec3& t = p.translation();
    const Quat& q = p.rotation();
    return {{"translation", {t.x, t.y, t.z}}, {"rotation_wxyz", {q.w, q.x, q.y, q.z}}};
}

}  // namespace

std::string PoseCompareResult::to_json() const
{
    json j;
    j["entity"] = entity;
    j["time"] = time;
    j["expert"] = pose_json(expert);
    j["user"] = pose_json(user);
    j["tip_distance_mm"] = delta.tip_distance_mm;
    j["axis_angle_deg"] = delta.axis_angle_deg;
    return j.dump(2) + "\n";
}

std::string PoseCompareResult::to_text() const
{
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s at t=%.4f s: tip_distance %.3f mm, axis_angle %.3f deg\n", entity.c_str(), time,
                  delta.tip_distance_mm, delta.axis_angle_deg);
    return buf;
}

PoseCompareResult cmd_pose_compare(const SceneAssets& assets, double time, const RigidPose& user)
{
    const EntityDescriptor* instrument = assets.manifest.instrument();
    if (instrument == nullptr || !assets.instrument_trajectory) {
        throw CommandError("pose-compare: scene has no instrument trajectory");
    }
    if (!std::isfinite(time)) throw CommandError("pose-compare: --time must be finite");
    PoseCompareResult r;
    r.entity = instrument->id;
    r.time = time;
    r.expert = sample_pose(*assets.instrument_trajectory, time);
    r.user = user;
    r.delta = compare_poses(r.expert, user, instrument->tip_length);
    return r;
}

}  // namespace twin
