#pragma once

#include "twin/bytes.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace httplib {
class Server;
}

namespace twin {

struct ServeConfig {
    std::string bind_address = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::filesystem::path scene_root;
    bool allow_cors = false;
    std::optional<std::filesystem::path> static_dir;  // built viewer assets for GET /
};

/// Immutable snapshot of everything the HTTP API serves, read once at startup.
struct ScenePayloads {
    std::string manifest_json;
    std::vector<Bytes> frames;
    std::map<std::string, Bytes> trajectories;  // instrument id -> STRJ
    std::map<std::string, std::string> meshes;  // entity id -> OBJ text

    /// Validates the scene (throws like SceneAssets::load) and reads it.
    static ScenePayloads load(const std::filesystem::path& root);
};

/// Strong validator for a response body (quoted 64-bit FNV-1a hex).
std::string entity_tag(std::string_view body);

/// GET /api/manifest, /api/frames/{i}, /api/trajectory/{entity},
/// /api/mesh/{entity}, and the viewer under / when static_dir is set.
class SceneServer {
public:
    explicit SceneServer(ServeConfig config);
    ~SceneServer();

    SceneServer(const SceneServer&) = delete;
    SceneServer& operator=(const SceneServer&) = delete;

    /// Binds the listening socket and returns the port. Throws std::runtime_error.
    int bind();
    /// Serves until stop(); call bind() first.
    void listen();
    void stop();
    /// Blocks until the server accepts connections (for tests running listen() on a thread).
    void wait_until_ready() const;

    const ScenePayloads& payloads() const { return payloads_; }

private:
    void install_routes();

    ServeConfig config_;
    ScenePayloads payloads_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace twin
