#include "twin/commands.hpp"
#include "twin/playback.hpp"
#include "twin/pointcloud.hpp"
#include "twin/prefetch.hpp"
#include "twin/render.hpp"
#include "twin/scene_assets.hpp"
#include "twin/synthetic.hpp"
#include "twin/trajectory.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

namespace py = pybind11;
using namespace pybind11::literals;

namespace twin {
namespace {

using PositionArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using ColorArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

PointCloudFrame frame_from_arrays(const PositionArray& positions, const ColorArray& colors)
{
    if (positions.ndim() != 2 || positions.shape(1) != 3) throw std::invalid_argument("positions must have shape (N, 3)");
    if (colors.ndim() != 2 || colors.shape(1) != 3) throw std::invalid_argument("colors must have shape (N, 3)");
    if (positions.shape(0) != colors.shape(0)) throw std::invalid_argument("positions and colors differ in length");
    PointCloudFrame f;
    const auto n = static_cast<std::size_t>(positions.shape(0));
    f.positions.resize(n);
    f.colors.resize(n);
    std::memcpy(f.positions.data(), positions.data(), n * sizeof(Vec3f));
    std::memcpy(f.colors.data(), colors.data(), n * sizeof(Rgb8));
    f.bbox = n == 0 ? Aabb{} : bounds_of(f.positions);
    return f;
}

py::tuple frame_to_arrays(const PointCloudFrame& f)
{
    const auto n = static_cast<py::ssize_t>(f.size());
    PositionArray positions({n, py::ssize_t{3}});
    ColorArray colors({n, py::ssize_t{3}});
    std::memcpy(positions.mutable_data(), f.positions.data(), f.size() * sizeof(Vec3f));
    std::memcpy(colors.mutable_data(), f.colors.data(), f.size() * sizeof(Rgb8));
    return py::make_tuple(positions, colors);
}

py::array_t<std::uint8_t> image_to_array(const RgbImage& img)
{
    py::array_t<std::uint8_t> out({img.height, img.width, 3});
    std::memcpy(out.mutable_data(), img.pixels.data(), img.pixels.size());
    return out;
}

Bytes to_bytes(const py::bytes& b)
{
    const std::string_view s = b;
    return Bytes(s.begin(), s.end());
}

py::bytes from_bytes(const Bytes& b) { return py::bytes(reinterpret_cast<const char*>(b.data()), b.size()); }

RigidPose pose_from(const std::array<double, 7>& v)
{
    return RigidPose({v[0], v[1], v[2]}, Quat{v[3], v[4], v[5], v[6]});
}

py::dict report_dict(const LoaderReport& r)
{
    return py::dict("frames"_a = r.frames, "stall_count"_a = r.stall_count, "loads_issued"_a = r.loads_issued,
                    "blocked_seconds"_a = r.blocked_seconds, "elapsed_seconds"_a = r.elapsed_seconds);
}

}  // namespace
}  // namespace twin

PYBIND11_MODULE(_twin, m)
{
    using namespace twin;
    m.doc() = "Bindings for the twinreplay scene, codec and rendering core";

    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<ManifestError>(m, "ManifestError", PyExc_ValueError);
    py::register_exception<CommandError>(m, "CommandError", PyExc_RuntimeError);

    m.def(
        "encode_spcf",
        [](const PositionArray& positions, const ColorArray& colors) {
            return from_bytes(encode_spcf(frame_from_arrays(positions, colors)));
        },
        "positions"_a, "colors"_a, "Encodes float32 (N, 3) positions and uint8 (N, 3) colors as an SPCF frame.");
    m.def(
        "decode_spcf", [](const py::bytes& data) { return frame_to_arrays(decode_spcf(to_bytes(data))); }, "data"_a,
        "Returns (positions, colors) arrays.");
    m.def(
        "voxel_downsample",
        [](const PositionArray& positions, const ColorArray& colors, double voxel_size, std::array<double, 3> origin) {
            const PointCloudFrame f = frame_from_arrays(positions, colors);
            return frame_to_arrays(voxel_downsample(f, {{origin[0], origin[1], origin[2]}, voxel_size}));
        },
        "positions"_a, "colors"_a, "voxel_size"_a, "origin"_a = std::array<double, 3>{0, 0, 0});

    m.def("quantize_depth", &quantize_depth, "z_view"_a, "near"_a, "far"_a,
          "Depth byte for a view-space distance, or None when outside [near, far).");
    m.def(
        "pack_cell", [](std::uint8_t depth, std::array<std::uint8_t, 3> c) { return pack_cell(depth, {c[0], c[1], c[2]}); },
        "depth"_a, "color"_a);
    m.attr("EMPTY_CELL") = empty_cell;

    m.def("frame_index_at", &frame_index_at, "media_time"_a, "anim_fps"_a, "frame_count"_a, "loop"_a = false);

    m.def(
        "compare_poses",
        [](const std::array<double, 7>& expert, const std::array<double, 7>& user, double tip_length) {
            const PoseDelta d = compare_poses(pose_from(expert), pose_from(user), tip_length);
            return py::make_tuple(d.tip_distance_mm, d.axis_angle_deg);
        },
        "expert"_a, "user"_a, "tip_length"_a,
        "Poses are (tx, ty, tz, qw, qx, qy, qz); returns (tip_distance_mm, axis_angle_deg).");

    m.def(
        "generate_synthetic",
        [](const std::filesystem::path& out_dir, std::uint64_t seed, int frames, std::size_t points) {
            SyntheticSceneSpec spec;
            spec.seed = seed;
            spec.frame_count = frames;
            spec.points_per_frame = points;
            generate_synthetic_scene(spec, out_dir);
        },
        "out_dir"_a, "seed"_a = 42, "frames"_a = 30, "points"_a = 20000);

    m.def(
        "render",
        [](const std::filesystem::path& scene, std::optional<int> frame, std::optional<double> time,
           const std::string& eye, std::vector<std::string> hide, std::optional<int> width, std::optional<int> height,
           std::optional<double> ipd, unsigned workers) {
            RenderOptions o;
            o.scene = scene;
            o.frame = frame;
            o.time = time;
            o.eye = parse_eye(eye);
            o.hide = std::move(hide);
            o.width = width;
            o.height = height;
            o.ipd = ipd;
            o.workers = workers;
            RgbImage img;
            {
                py::gil_scoped_release release;
                img = render_scene_image(SceneAssets::load(scene), o);
            }
            return image_to_array(img);
        },
        "scene"_a, "frame"_a = py::none(), "time"_a = py::none(), "eye"_a = "mono",
        "hide"_a = std::vector<std::string>{}, "width"_a = py::none(), "height"_a = py::none(), "ipd"_a = py::none(),
        "workers"_a = 1, "Renders a scene directory to an (H, W, 3) uint8 array.");

    m.def(
        "simulate_loader",
        [](std::size_t frames, double latency, double period, bool prefetch) {
            std::vector<Bytes> encoded(frames, encode_spcf(PointCloudFrame{}));
            const MemoryFrameStore store(std::move(encoded));
            return report_dict(simulate_loader(store, {frames, latency, period, prefetch, false}));
        },
        "frames"_a = 30, "latency"_a = 0.020, "period"_a = 1.0 / 30.0, "prefetch"_a = true,
        "Virtual-time playback of the two-slot loader.");

    m.def("read_ppm", [](const py::bytes& data) { return image_to_array(read_ppm(to_bytes(data))); }, "data"_a);
}
