#pragma once

#include "twin/math.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace twin {

/// Manifest parse or validation failure. The message always starts with the
/// offending field path, e.g. "entities[1].tip_length: must be positive".
class ManifestError : public std::runtime_error {
public:
    ManifestError(const std::string& field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what), field_(field)
    {
    }
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

enum class EntityKind { pointcloud_sequence, mesh, instrument };

std::string_view to_string(EntityKind kind);

struct EntityDescriptor {
    std::string id;
    EntityKind kind = EntityKind::mesh;
    // Mesh OBJ path or instrument trajectory path. Empty for point-cloud sequences.
    std::string uri;
    // Frame path template containing "{index:06}". Point-cloud sequences only.
    std::string uri_pattern;
    Rgb8 base_color{180, 180, 180};
    double tip_length = 0.0;  // instrument only, meters
    bool initially_visible = true;

    friend bool operator==(const EntityDescriptor&, const EntityDescriptor&) = default;
};

struct CameraConfig {
    Vec3 position{0.0, 1.6, 2.0};
    Vec3 look_at{0.0, 1.0, 0.0};
    Vec3 up{0.0, 1.0, 0.0};
    double vertical_fov = 60.0;  // degrees
    double ipd = 0.064;          // meters
    int image_width = 1024;
    int image_height = 1024;

    friend bool operator==(const CameraConfig&, const CameraConfig&) = default;
};

struct SceneManifest {
    std::string name;
    double anim_fps = 30.0;
    int frame_count = 1;
    double near_clip = 0.05;
    double far_clip = 6.0;
    std::vector<EntityDescriptor> entities;
    CameraConfig default_camera;

    const EntityDescriptor* find(std::string_view id) const;
    const EntityDescriptor& pointcloud() const;
    const EntityDescriptor* instrument() const;

    friend bool operator==(const SceneManifest&, const SceneManifest&) = default;
};

/// Parses and validates a UTF-8 JSON manifest. Throws ManifestError.
SceneManifest parse_manifest(std::string_view json_text);

/// Checks every invariant of an in-memory manifest. Throws ManifestError.
void check_manifest(const SceneManifest& manifest);

/// Serializes to pretty-printed JSON; parse_manifest(serialize_manifest(m)) == m.
std::string serialize_manifest(const SceneManifest& manifest);

/// Expands the "{index:06}" placeholder of a frame pattern.
std::string expand_frame_uri(std::string_view pattern, std::size_t index);

inline constexpr std::string_view frame_index_token = "{index:06}";

struct Diagnostic {
    std::string entity_id;
    std::string message;

    friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

using UriResolver = std::function<bool(const std::string& relative_uri)>;

/// Reports every referenced resource that does not resolve. Empty result means
/// the scene is complete.
std::vector<Diagnostic> validate_scene(const SceneManifest& manifest, const UriResolver& exists);

}  // namespace twin
