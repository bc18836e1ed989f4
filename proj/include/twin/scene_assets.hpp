#pragma once

#include "twin/playback.hpp"
#include "twin/prefetch.hpp"
#include "twin/render.hpp"
#include "twin/scene.hpp"
#include "twin/trajectory.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace twin {

inline constexpr const char* manifest_filename = "scene.json";

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, ByteView bytes);
void write_file(const std::filesystem::path& path, std::string_view text);

/// A scene directory with its static resources loaded. Frames stay on disk
/// and are read through frame_store().
struct SceneAssets {
    std::filesystem::path root;
    SceneManifest manifest;
    std::map<std::string, TriangleMesh> meshes;  // mesh entities, world space
    std::optional<Trajectory> instrument_trajectory;
    std::optional<TriangleMesh> instrument_mesh;  // local frame

    /// Throws ManifestError (including unresolved resources), FormatError, or
    /// std::runtime_error for I/O failures.
    static SceneAssets load(const std::filesystem::path& root);

    DirectoryFrameStore frame_store() const;
    PinholeCamera default_camera() const;
};

/// Meshes visible in `state` at `media_time`, instrument placed at its sampled pose.
/// `points` is attached only when the point-cloud entity is visible.
RenderScene compose_scene(const SceneAssets& assets, const PlaybackState& state, double media_time,
                          const PointCloudFrame* points);

}  // namespace twin
