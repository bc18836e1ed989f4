#include "twin/server.hpp"

#include "twin/mesh_io.hpp"
#include "twin/scene_assets.hpp"

#include <httplib.h>

#include <charconv>
#include <cstdio>

namespace twin {

namespace fs = std::filesystem;

ScenePayloads ScenePayloads::load(const fs::path& root)
{
    const SceneAssets assets = SceneAssets::load(root);
    ScenePayloads p;
    const Bytes manifest = read_file(root / manifest_filename);
    p.manifest_json.assign(manifest.begin(), manifest.end());

    const DirectoryFrameStore store = assets.frame_store();
    p.frames.reserve(store.frame_count());
    for (std::size_t i = 0; i < store.frame_count(); ++i) {
        p.frames.push_back(store.load(i));
    }
    for (const auto& e : assets.manifest.entities) {
        if (e.kind == EntityKind::mesh) {
            const Bytes obj = read_file(root / e.uri);
            p.meshes.emplace(e.id, std::string(obj.begin(), obj.end()));
        } else if (e.kind == EntityKind::instrument) {
            p.trajectories.emplace(e.id, read_file(root / e.uri));
            p.meshes.emplace(e.id, write_obj(*assets.instrument_mesh));
        }
    }
    return p;
}

std::string entity_tag(std::string_view body)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : body) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "\"%016llx\"", static_cast<unsigned long long>(h));
    return buf;
}

SceneServer::SceneServer(ServeConfig config)
    : config_(std::move(config)), payloads_(ScenePayloads::load(config_.scene_root)),
      server_(std::make_unique<httplib::Server>())
{
    // No SO_REUSEPORT: a second server on a busy port must fail, not share it.
    server_->set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    install_routes();
}

SceneServer::~SceneServer() { stop(); }

namespace {

void send_immutable(const httplib::Request& req, httplib::Response& res, std::string_view body,
                    const char* content_type)
{
    const std::string tag = entity_tag(body);
    res.set_header("ETag", tag);
    res.set_header("Cache-Control", "public, max-age=31536000, immutable");
    if (req.get_header_value("If-None-Match") == tag) {
        res.status = 304;
        return;
    }
    res.set_content(std::string(body), content_type);
}

void send_error(httplib::Response& res, int status, const std::string& message)
{
    res.status = status;
    res.set_content(message + "\n", "text/plain");
}

std::string_view as_text(const Bytes& b) { return {reinterpret_cast<const char*>(b.data()), b.size()}; }

}  // namespace

void SceneServer::install_routes()
{
    httplib::Server& s = *server_;

    s.Get("/api/manifest", [this](const httplib::Request& req, httplib::Response& res) {
        send_immutable(req, res, payloads_.manifest_json, "application/json");
    });

    s.Get(R"(/api/frames/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string& token = req.matches[1].str();
        std::size_t index = 0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), index);
        if (token.empty() || ec == std::errc::invalid_argument || ptr != token.data() + token.size()) {
            send_error(res, 400, "frame index must be a non-negative integer");
            return;
        }
        if (ec == std::errc::result_out_of_range || index >= payloads_.frames.size()) {
            send_error(res, 404, "no frame " + token);
            return;
        }
        send_immutable(req, res, as_text(payloads_.frames[index]), "application/octet-stream");
    });

    s.Get(R"(/api/trajectory/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        auto it = payloads_.trajectories.find(req.matches[1].str());
        if (it == payloads_.trajectories.end()) {
            send_error(res, 404, "no trajectory for entity " + req.matches[1].str());
            return;
        }
        send_immutable(req, res, as_text(it->second), "application/octet-stream");
    });

    s.Get(R"(/api/mesh/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        auto it = payloads_.meshes.find(req.matches[1].str());
        if (it == payloads_.meshes.end()) {
            send_error(res, 404, "no mesh for entity " + req.matches[1].str());
            return;
        }
        send_immutable(req, res, it->second, "text/plain");
    });

    if (config_.static_dir) {
        if (!s.set_mount_point("/", config_.static_dir->string())) {
            throw std::runtime_error("static directory not found: " + config_.static_dir->string());
        }
    } else {
        s.Get("/", [](const httplib::Request&, httplib::Response& res) {
            send_error(res, 404, "viewer assets are not built; start with --static-dir to serve them");
        });
    }

    if (config_.allow_cors) {
        s.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", "*");
        });
    }
}

int SceneServer::bind()
{
    int port = config_.port;
    if (port == 0) {
        port = server_->bind_to_any_port(config_.bind_address);
    } else if (!server_->bind_to_port(config_.bind_address, port)) {
        port = -1;
    }
    if (port < 0) {
        throw std::runtime_error("cannot bind " + config_.bind_address + ":" + std::to_string(config_.port));
    }
    return port;
}

void SceneServer::listen() { server_->listen_after_bind(); }

void SceneServer::stop()
{
    if (server_) server_->stop();
}

void SceneServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace twin
