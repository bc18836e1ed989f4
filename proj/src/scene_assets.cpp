#include "twin/scene_assets.hpp"

#include "twin/mesh_io.hpp"

#include <fstream>
#include <iterator>
#include <stdexcept>

namespace twin {

namespace fs = std::filesystem;

Bytes read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, ByteView bytes)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + path.string());
}

void write_file(const fs::path& path, std::string_view text)
{
    write_file(path, ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

SceneAssets SceneAssets::load(const fs::path& root)
{
    SceneAssets a;
    a.root = root;
    const Bytes manifest_bytes = read_file(root / manifest_filename);
    a.manifest = parse_manifest(std::string_view(reinterpret_cast<const char*>(manifest_bytes.data()), manifest_bytes.size()));

    const auto diagnostics = validate_scene(a.manifest, [&](const std::string& uri) { return fs::is_regular_file(root / uri); });
    if (!diagnostics.empty()) {
        std::string msg = "scene is incomplete:";
        for (const auto& d : diagnostics) msg += "\n  " + d.entity_id + ": " + d.message;
        throw ManifestError("entities", msg);
    }

    for (const auto& e : a.manifest.entities) {
        try {
            if (e.kind == EntityKind::mesh) {
                const Bytes text = read_file(root / e.uri);
                a.meshes.emplace(e.id, parse_obj(std::string_view(reinterpret_cast<const char*>(text.data()), text.size()),
                                                 e.base_color));
            } else if (e.kind == EntityKind::instrument) {
                a.instrument_trajectory = decode_strj(read_file(root / e.uri));
                a.instrument_mesh = make_drill_mesh(e.tip_length, e.base_color);
            }
        } catch (const FormatError& err) {
            throw FormatError(e.uri + ": " + err.what());
        }
    }
    return a;
}

DirectoryFrameStore SceneAssets::frame_store() const
{
    return DirectoryFrameStore(root, manifest.pointcloud().uri_pattern, static_cast<std::size_t>(manifest.frame_count));
}

PinholeCamera SceneAssets::default_camera() const
{
    return PinholeCamera::from_config(manifest.default_camera, manifest.near_clip, manifest.far_clip);
}

RenderScene compose_scene(const SceneAssets& assets, const PlaybackState& state, double media_time,
                          const PointCloudFrame* points)
{
    RenderScene scene;
    for (const auto& e : assets.manifest.entities) {
        if (!state.is_visible(e.id)) continue;
        switch (e.kind) {
        case EntityKind::mesh:
            scene.meshes.push_back(assets.meshes.at(e.id));
            break;
        case EntityKind::instrument:
            if (assets.instrument_trajectory && assets.instrument_mesh) {
                const RigidPose pose = sample_pose(*assets.instrument_trajectory, media_time);
                scene.meshes.push_back(assets.instrument_mesh->transformed(pose));
            }
            break;
        case EntityKind::pointcloud_sequence:
            scene.points = points;
            break;
        }
    }
    return scene;
}

}  // namespace twin
