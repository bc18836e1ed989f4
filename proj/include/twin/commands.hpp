#pragma once

#include "twin/pointcloud.hpp"
#include "twin/prefetch.hpp"
#include "twin/render.hpp"
#include "twin/scene_assets.hpp"
#include "twin/trajectory.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace twin {

/// Failure of a CLI command; main() prints it and exits with status 1.
class CommandError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ConvertOptions {
    std::vector<std::filesystem::path> inputs;
    std::filesystem::path out_dir;
    std::optional<Aabb> crop;
    std::optional<double> voxel_size;
    Vec3 voxel_origin;
    double anim_fps = 30.0;
    std::string name = "converted";
};

struct ConvertResult {
    std::vector<std::size_t> points_in;
    std::vector<std::size_t> points_out;
};

/// PLY files -> frames/NNNNNN.spcf plus a scene.json skeleton. Nothing is
/// written if any input fails; the error lists every failing file.
ConvertResult cmd_convert(const ConvertOptions& options);

enum class Eye { mono, left, right, stereo };

Eye parse_eye(const std::string& s);

struct RenderOptions {
    std::filesystem::path scene;
    std::optional<double> time;
    std::optional<int> frame;
    Eye eye = Eye::mono;
    std::vector<std::string> hide;
    std::optional<int> width;
    std::optional<int> height;
    std::optional<double> fov;
    std::optional<double> near;
    std::optional<double> far;
    std::optional<double> ipd;
    unsigned workers = 1;
};

/// Media time from --time or --frame (frame / anim_fps), default 0.
double render_time(const RenderOptions& options, const SceneManifest& manifest);

RgbImage render_scene_image(const SceneAssets& assets, const RenderOptions& options);
RgbImage cmd_render(const RenderOptions& options, const std::filesystem::path& out);

enum class BenchMode { sync, async, both };

struct BenchOptions {
    std::filesystem::path scene;
    double latency_ms = 20.0;
    BenchMode mode = BenchMode::both;
    bool virtual_clock = false;
    std::optional<std::size_t> frames;
};

struct BenchResult {
    std::optional<LoaderReport> sync;
    std::optional<LoaderReport> async;
    std::optional<double> speedup;  // sync blocked time / async blocked time
    std::string clock;
    double latency_ms = 0.0;
    double frame_period_ms = 0.0;

    std::string to_json() const;
    std::string to_text() const;
};

BenchResult cmd_bench_loader(const BenchOptions& options);

/// "tx ty tz qw qx qy qz" (meters, unit quaternion). Throws CommandError.
RigidPose parse_pose_string(const std::string& text);

struct PoseCompareResult {
    std::string entity;
    double time = 0.0;
    RigidPose expert;
    RigidPose user;
    PoseDelta delta;

    std::string to_json() const;
    std::string to_text() const;
};

PoseCompareResult cmd_pose_compare(const SceneAssets& assets, double time, const RigidPose& user);

}  // namespace twin
