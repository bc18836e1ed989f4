#include "twin/scene.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

namespace twin {

using nlohmann::json;

namespace {

const json* member(const json& obj, const char* key)
{
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const std::string& path, const char* key)
{
    const json* v = member(obj, key);
    if (v == nullptr) {
        throw ManifestError(path + key, "missing required field");
    }
    return *v;
}

double as_number(const json& v, const std::string& path)
{
    if (!v.is_number()) {
        throw ManifestError(path, "expected a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        throw ManifestError(path, "must be finite");
    }
    return d;
}

int as_int(const json& v, const std::string& path)
{
    if (!v.is_number_integer()) {
        throw ManifestError(path, "expected an integer");
    }
    const auto i = v.get<std::int64_t>();
    if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) {
        throw ManifestError(path, "integer out of range");
    }
    return static_cast<int>(i);
}

std::string as_string(const json& v, const std::string& path)
{
    if (!v.is_string()) {
        throw ManifestError(path, "expected a string");
    }
    return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& path)
{
    if (!v.is_boolean()) {
        throw ManifestError(path, "expected a boolean");
    }
    return v.get<bool>();
}

Vec3 as_vec3(const json& v, const std::string& path)
{
    if (!v.is_array() || v.size() != 3) {
        throw ManifestError(path, "expected an array of 3 numbers");
    }
    return {as_number(v[0], path + "[0]"), as_number(v[1], path + "[1]"), as_number(v[2], path + "[2]")};
}

Rgb8 as_rgb(const json& v, const std::string& path)
{
    if (!v.is_array() || v.size() != 3) {
        throw ManifestError(path, "expected an array of 3 bytes");
    }
    std::array<std::uint8_t, 3> c{};
    for (std::size_t i = 0; i < 3; ++i) {
        const int x = as_int(v[i], path + "[" + std::to_string(i) + "]");
        if (x < 0 || x > 255) {
            throw ManifestError(path + "[" + std::to_string(i) + "]", "must be in [0, 255]");
        }
        c[i] = static_cast<std::uint8_t>(x);
    }
    return {c[0], c[1], c[2]};
}

EntityKind as_kind(const json& v, const std::string& path)
{
    const std::string s = as_string(v, path);
    if (s == "pointcloud_sequence") return EntityKind::pointcloud_sequence;
    if (s == "mesh") return EntityKind::mesh;
    if (s == "instrument") return EntityKind::instrument;
    throw ManifestError(path, "unknown entity kind \"" + s + "\"");
}

CameraConfig parse_camera(const json& j, const std::string& path)
{
    if (!j.is_object()) {
        throw ManifestError(path, "expected an object");
    }
    CameraConfig c;
    if (auto* v = member(j, "position")) c.position = as_vec3(*v, path + ".position");
    if (auto* v = member(j, "look_at")) c.look_at = as_vec3(*v, path + ".look_at");
    if (auto* v = member(j, "up")) c.up = as_vec3(*v, path + ".up");
    if (auto* v = member(j, "vertical_fov")) c.vertical_fov = as_number(*v, path + ".vertical_fov");
    if (auto* v = member(j, "ipd")) c.ipd = as_number(*v, path + ".ipd");
    if (auto* v = member(j, "image_width")) c.image_width = as_int(*v, path + ".image_width");
    if (auto* v = member(j, "image_height")) c.image_height = as_int(*v, path + ".image_height");
    return c;
}

EntityDescriptor parse_entity(const json& j, const std::string& path)
{
    if (!j.is_object()) {
        throw ManifestError(path, "expected an object");
    }
    const std::string prefix = path + ".";
    EntityDescriptor e;
    e.id = as_string(require(j, prefix, "id"), prefix + "id");
    e.kind = as_kind(require(j, prefix, "kind"), prefix + "kind");
    switch (e.kind) {
    case EntityKind::pointcloud_sequence:
        e.uri_pattern = as_string(require(j, prefix, "uri_pattern"), prefix + "uri_pattern");
        break;
    case EntityKind::mesh:
        e.uri = as_string(require(j, prefix, "uri"), prefix + "uri");
        break;
    case EntityKind::instrument:
        e.tip_length = as_number(require(j, prefix, "tip_length"), prefix + "tip_length");
        // A missing trajectory is reported by validate_scene, not rejected here.
        if (auto* v = member(j, "uri")) e.uri = as_string(*v, prefix + "uri");
        break;
    }
    if (auto* v = member(j, "base_color")) e.base_color = as_rgb(*v, prefix + "base_color");
    if (auto* v = member(j, "initially_visible")) e.initially_visible = as_bool(*v, prefix + "initially_visible");
    return e;
}

json vec3_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

}  // namespace

std::string_view to_string(EntityKind kind)
{
    switch (kind) {
    case EntityKind::pointcloud_sequence: return "pointcloud_sequence";
    case EntityKind::mesh: return "mesh";
    case EntityKind::instrument: return "instrument";
    }
    return "unknown";
}

const EntityDescriptor* SceneManifest::find(std::string_view id) const
{
    auto it = std::find_if(entities.begin(), entities.end(), [&](const auto& e) { return e.id == id; });
    return it == entities.end() ? nullptr : &*it;
}

const EntityDescriptor& SceneManifest::pointcloud() const
{
    for (const auto& e : entities) {
        if (e.kind == EntityKind::pointcloud_sequence) return e;
    }
    throw ManifestError("entities", "no pointcloud_sequence entity");
}

const EntityDescriptor* SceneManifest::instrument() const
{
    for (const auto& e : entities) {
        if (e.kind == EntityKind::instrument) return &e;
    }
    return nullptr;
}

void check_manifest(const SceneManifest& m)
{
    if (!(m.anim_fps > 0.0)) throw ManifestError("anim_fps", "anim_fps must be positive");
    if (m.frame_count < 1) throw ManifestError("frame_count", "frame_count must be at least 1");
    if (!(m.near_clip > 0.0)) throw ManifestError("near_clip", "near_clip must be positive");
    if (!(m.far_clip > m.near_clip)) throw ManifestError("far_clip", "far_clip must exceed near_clip");

    const CameraConfig& c = m.default_camera;
    if (!(c.vertical_fov > 0.0 && c.vertical_fov < 180.0)) {
        throw ManifestError("default_camera.vertical_fov", "must be in (0, 180) degrees");
    }
    if (!(c.ipd >= 0.0)) throw ManifestError("default_camera.ipd", "must be non-negative");
    if (c.image_width < 1) throw ManifestError("default_camera.image_width", "must be positive");
    if (c.image_height < 1) throw ManifestError("default_camera.image_height", "must be positive");
    const Vec3 forward = c.look_at - c.position;
    if (norm(forward) == 0.0) throw ManifestError("default_camera.look_at", "must differ from position");
    if (norm(c.up) == 0.0) throw ManifestError("default_camera.up", "must be non-zero");
    if (norm(cross(normalized(forward), normalized(c.up))) < 1e-9) {
        throw ManifestError("default_camera.up", "must not be parallel to the viewing direction");
    }

    int pointclouds = 0;
    int instruments = 0;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < m.entities.size(); ++i) {
        const EntityDescriptor& e = m.entities[i];
        const std::string path = "entities[" + std::to_string(i) + "]";
        if (e.id.empty()) throw ManifestError(path + ".id", "must be non-empty");
        if (!ids.insert(e.id).second) throw ManifestError(path + ".id", "duplicate entity id \"" + e.id + "\"");
        switch (e.kind) {
        case EntityKind::pointcloud_sequence:
            ++pointclouds;
            if (e.uri_pattern.find(frame_index_token) == std::string::npos) {
                throw ManifestError(path + ".uri_pattern", "must contain {index:06}");
            }
            break;
        case EntityKind::mesh:
            if (e.uri.empty()) throw ManifestError(path + ".uri", "must be non-empty");
            break;
        case EntityKind::instrument:
            ++instruments;
            if (!(e.tip_length > 0.0)) throw ManifestError(path + ".tip_length", "tip_length must be positive");
            break;
        }
    }
    if (pointclouds != 1) {
        throw ManifestError("entities", "exactly one pointcloud_sequence entity required, found " +
                                            std::to_string(pointclouds));
    }
    if (instruments > 1) {
        throw ManifestError("entities", "at most one instrument entity allowed, found " + std::to_string(instruments));
    }
}

SceneManifest parse_manifest(std::string_view json_text)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ManifestError("", std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ManifestError("", "manifest root must be a JSON object");
    }

    SceneManifest m;
    m.name = as_string(require(j, "", "name"), "name");
    if (auto* v = member(j, "anim_fps")) m.anim_fps = as_number(*v, "anim_fps");
    m.frame_count = as_int(require(j, "", "frame_count"), "frame_count");
    m.near_clip = as_number(require(j, "", "near_clip"), "near_clip");
    m.far_clip = as_number(require(j, "", "far_clip"), "far_clip");
    if (auto* v = member(j, "default_camera")) m.default_camera = parse_camera(*v, "default_camera");

    const json& entities = require(j, "", "entities");
    if (!entities.is_array()) {
        throw ManifestError("entities", "expected an array");
    }
    for (std::size_t i = 0; i < entities.size(); ++i) {
        m.entities.push_back(parse_entity(entities[i], "entities[" + std::to_string(i) + "]"));
    }
    check_manifest(m);
    return m;
}

std::string serialize_manifest(const SceneManifest& m)
{
    json j;
    j["name"] = m.name;
    j["anim_fps"] = m.anim_fps;
    j["frame_count"] = m.frame_count;
    j["near_clip"] = m.near_clip;
    j["far_clip"] = m.far_clip;

    const CameraConfig& c = m.default_camera;
    j["default_camera"] = {
        {"position", vec3_json(c.position)}, {"look_at", vec3_json(c.look_at)}, {"up", vec3_json(c.up)},
        {"vertical_fov", c.vertical_fov},    {"ipd", c.ipd},                   {"image_width", c.image_width},
        {"image_height", c.image_height},
    };

    json entities = json::array();
    for (const auto& e : m.entities) {
        json je;
        je["id"] = e.id;
        je["kind"] = std::string(to_string(e.kind));
        if (e.kind == EntityKind::pointcloud_sequence) {
            je["uri_pattern"] = e.uri_pattern;
        } else if (!e.uri.empty()) {
            je["uri"] = e.uri;
        }
        if (e.kind == EntityKind::instrument) {
            je["tip_length"] = e.tip_length;
        }
        je["base_color"] = json::array({e.base_color.r, e.base_color.g, e.base_color.b});
        je["initially_visible"] = e.initially_visible;
        entities.push_back(std::move(je));
    }
    j["entities"] = std::move(entities);
    return j.dump(2) + "\n";
}

std::string expand_frame_uri(std::string_view pattern, std::size_t index)
{
    const auto pos = pattern.find(frame_index_token);
    if (pos == std::string_view::npos) {
        throw ManifestError("uri_pattern", "must contain {index:06}");
    }
    char digits[32];
    std::snprintf(digits, sizeof digits, "%06zu", index);
    std::string out(pattern.substr(0, pos));
    out += digits;
    out += pattern.substr(pos + frame_index_token.size());
    return out;
}

std::vector<Diagnostic> validate_scene(const SceneManifest& m, const UriResolver& exists)
{
    std::vector<Diagnostic> out;
    auto check = [&](const EntityDescriptor& e, const std::string& uri) {
        if (!exists(uri)) {
            out.push_back({e.id, "missing \"" + uri + "\""});
        }
    };
    for (const auto& e : m.entities) {
        switch (e.kind) {
        case EntityKind::pointcloud_sequence:
            for (int i = 0; i < m.frame_count; ++i) {
                check(e, expand_frame_uri(e.uri_pattern, static_cast<std::size_t>(i)));
            }
            break;
        case EntityKind::mesh:
            check(e, e.uri);
            break;
        case EntityKind::instrument:
            if (e.uri.empty()) {
                out.push_back({e.id, "instrument \"" + e.id + "\" has no trajectory uri"});
            } else {
                check(e, e.uri);
            }
            break;
        }
    }
    return out;
}

}  // namespace twin
