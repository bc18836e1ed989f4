#include "twin/commands.hpp"
#include "twin/server.hpp"
#include "twin/synthetic.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <sstream>

namespace {

using namespace twin;
namespace fs = std::filesystem;

fs::path default_scene_root()
{
    const char* env = std::getenv("TWIN_SCENE_ROOT");
    return env ? fs::path(env) : fs::path();
}

Aabb parse_crop(const std::vector<double>& v)
{
    Aabb box{{static_cast<float>(v[0]), static_cast<float>(v[1]), static_cast<float>(v[2])},
             {static_cast<float>(v[3]), static_cast<float>(v[4]), static_cast<float>(v[5])}};
    for (int a = 0; a < 3; ++a) {
        if (!(box.min[a] <= box.max[a])) throw CommandError("convert: --crop min must not exceed max");
    }
    return box;
}

void require_scene(const fs::path& scene)
{
    if (scene.empty()) throw CommandError("no scene given; pass --scene or set TWIN_SCENE_ROOT");
}

SceneServer* active_server = nullptr;

extern "C" void on_signal(int)
{
    if (active_server) active_server->stop();
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Surgical replay toolkit: convert captures, render, benchmark, compare poses and serve scenes"};
    app.require_subcommand(1);
    const fs::path env_root = default_scene_root();

    // convert
    ConvertOptions convert;
    std::vector<double> crop;
    auto* c = app.add_subcommand("convert", "Convert PLY captures into an SPCF frame sequence");
    c->add_option("inputs", convert.inputs, "PLY files in playback order")->required()->check(CLI::ExistingFile);
    c->add_option("-o,--out", convert.out_dir, "Output scene directory")->required();
    c->add_option("--crop", crop, "Crop box: minx miny minz maxx maxy maxz")->expected(6);
    c->add_option("--voxel-size", convert.voxel_size, "Voxel edge length in meters");
    c->add_option("--fps", convert.anim_fps, "Capture rate written to the manifest");
    c->add_option("--name", convert.name, "Scene name");
    bool convert_quiet = false;
    c->add_flag("-q,--quiet", convert_quiet, "Do not print per-frame point counts");

    // render
    RenderOptions render;
    render.scene = env_root;
    std::string eye = "mono";
    fs::path render_out;
    auto* r = app.add_subcommand("render", "Render one frame of a scene to a PPM image");
    r->add_option("--scene", render.scene, "Scene directory (default: $TWIN_SCENE_ROOT)");
    auto* time_opt = r->add_option("--time", render.time, "Media time in seconds");
    r->add_option("--frame", render.frame, "Frame index")->excludes(time_opt);
    r->add_option("--eye", eye, "mono, left, right or stereo");
    r->add_option("--hide", render.hide, "Entity id to hide (repeatable)");
    r->add_option("--width", render.width, "Image width per eye")->check(CLI::PositiveNumber);
    r->add_option("--height", render.height, "Image height")->check(CLI::PositiveNumber);
    r->add_option("--fov", render.fov, "Vertical field of view in degrees");
    r->add_option("--near", render.near, "Near clip override");
    r->add_option("--far", render.far, "Far clip override");
    r->add_option("--ipd", render.ipd, "Eye separation in meters");
    r->add_option("--workers", render.workers, "Splatting threads")->check(CLI::PositiveNumber);
    r->add_option("-o,--out", render_out, "Output PPM path")->required();

    // bench-loader
    BenchOptions bench;
    bench.scene = env_root;
    std::string bench_mode = "both";
    bool bench_json = false;
    auto* b = app.add_subcommand("bench-loader", "Compare synchronous loading against two-slot prefetch");
    b->add_option("--scene", bench.scene, "Scene directory (default: $TWIN_SCENE_ROOT)");
    b->add_option("--latency", bench.latency_ms, "Simulated load latency per frame, milliseconds");
    b->add_option("--mode", bench_mode, "sync, async or both")->check(CLI::IsMember({"sync", "async", "both"}));
    b->add_option("--frames", bench.frames, "Frames to play (default: whole scene)");
    b->add_flag("--virtual-clock", bench.virtual_clock, "Discrete-event simulation instead of real sleeps");
    b->add_flag("--json", bench_json, "Machine-readable report");

    // gen-synthetic
    SyntheticSceneSpec synth;
    fs::path synth_out;
    auto* g = app.add_subcommand("gen-synthetic", "Generate a deterministic synthetic scene");
    g->add_option("-o,--out", synth_out, "Output scene directory")->required();
    g->add_option("--seed", synth.seed, "RNG seed");
    g->add_option("--frames", synth.frame_count, "Frame count")->check(CLI::PositiveNumber);
    g->add_option("--fps", synth.anim_fps, "Capture rate");
    g->add_option("--points", synth.points_per_frame, "Points generated per frame before downsampling");
    g->add_option("--voxel-size", synth.voxel_size, "Voxel edge length in meters");
    g->add_option("--tip-length", synth.tip_length, "Drill tip length in meters");

    // pose-compare
    fs::path pose_scene = env_root;
    double pose_time = 0.0;
    std::string user_pose;
    bool pose_json = false;
    auto* p = app.add_subcommand("pose-compare", "Compare a user drill pose to the expert pose at a time");
    p->add_option("--scene", pose_scene, "Scene directory (default: $TWIN_SCENE_ROOT)");
    p->add_option("--time", pose_time, "Media time in seconds")->required();
    p->add_option("--user-pose", user_pose, "\"tx ty tz qw qx qy qz\"")->required();
    p->add_flag("--json", pose_json, "Machine-readable report");

    // serve
    ServeConfig serve;
    serve.scene_root = env_root;
    std::string static_dir;
    auto* s = app.add_subcommand("serve", "Serve a scene over HTTP");
    s->add_option("--scene", serve.scene_root, "Scene directory (default: $TWIN_SCENE_ROOT)");
    s->add_option("--bind", serve.bind_address, "Listen address");
    s->add_option("--port", serve.port, "Listen port (0 picks a free one)");
    s->add_flag("--cors", serve.allow_cors, "Send Access-Control-Allow-Origin: *");
    s->add_option("--static-dir", static_dir, "Built viewer assets served under /")->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    try {
        if (c->parsed()) {
            if (!crop.empty()) convert.crop = parse_crop(crop);
            const ConvertResult res = cmd_convert(convert);
            if (!convert_quiet) {
                for (std::size_t i = 0; i < res.points_in.size(); ++i) {
                    std::cout << "frame " << i << ": " << res.points_in[i] << " -> " << res.points_out[i]
                              << " points\n";
                }
            }
        } else if (r->parsed()) {
            require_scene(render.scene);
            render.eye = parse_eye(eye);
            const RgbImage img = cmd_render(render, render_out);
            std::cout << "wrote " << render_out.string() << " (" << img.width << "x" << img.height << ")\n";
        } else if (b->parsed()) {
            require_scene(bench.scene);
            bench.mode = bench_mode == "sync" ? BenchMode::sync : bench_mode == "async" ? BenchMode::async : BenchMode::both;
            const BenchResult res = cmd_bench_loader(bench);
            std::cout << (bench_json ? res.to_json() : res.to_text());
        } else if (g->parsed()) {
            generate_synthetic_scene(synth, synth_out);
            std::cout << "wrote synthetic scene to " << synth_out.string() << "\n";
        } else if (p->parsed()) {
            require_scene(pose_scene);
            const SceneAssets assets = SceneAssets::load(pose_scene);
            const PoseCompareResult res = cmd_pose_compare(assets, pose_time, parse_pose_string(user_pose));
            std::cout << (pose_json ? res.to_json() : res.to_text());
        } else if (s->parsed()) {
            require_scene(serve.scene_root);
            if (!static_dir.empty()) serve.static_dir = static_dir;
            SceneServer server(serve);
            const int port = server.bind();
            active_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "serving " << serve.scene_root.string() << " on http://" << serve.bind_address << ":" << port
                      << "/\n"
                      << std::flush;
            server.listen();
            active_server = nullptr;
        }
    } catch (const std::exception& e) {
        std::cerr << "twin: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
