#include "twin/render.hpp"

#include "twin/scene.hpp"
#include "twin/trajectory.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

namespace twin {

PinholeCamera PinholeCamera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up_hint, double vertical_fov,
                                     int width, int height, double near, double far)
{
    if (!(vertical_fov > 0.0 && vertical_fov < 180.0)) throw std::invalid_argument("vertical_fov must be in (0, 180)");
    if (width < 1 || height < 1) throw std::invalid_argument("image size must be positive");
    if (!(near > 0.0 && far > near)) throw std::invalid_argument("clip planes must satisfy 0 < near < far");
    const Vec3 dir = target - eye;
    if (norm(dir) == 0.0) throw std::invalid_argument("camera target coincides with eye");
    PinholeCamera c;
    c.eye = eye;
    c.forward = normalized(dir);
    const Vec3 side = cross(c.forward, up_hint);
    if (norm(side) < 1e-12) throw std::invalid_argument("camera up vector is parallel to the view direction");
    c.right = normalized(side);
    c.up = cross(c.right, c.forward);
    c.vertical_fov = vertical_fov;
    c.width = width;
    c.height = height;
    c.near = near;
    c.far = far;
    return c;
}

PinholeCamera PinholeCamera::from_config(const CameraConfig& config, double near, double far)
{
    return look_at(config.position, config.look_at, config.up, config.vertical_fov, config.image_width,
                   config.image_height, near, far);
}

double PinholeCamera::focal_px() const { return (height / 2.0) / std::tan(deg_to_rad(vertical_fov) / 2.0); }

PinholeCamera PinholeCamera::shifted(double offset) const
{
    PinholeCamera c = *this;
    c.eye = eye + right * offset;
    return c;
}

std::optional<std::uint8_t> quantize_depth(double z_view, double near, double far)
{
    const double d01 = (z_view - near) / (far - near);
    if (!(d01 >= 0.0 && d01 < 1.0)) {
        return std::nullopt;
    }
    // d01 < 1 can still round to 255.0 after scaling; 255 is reserved for the sentinel.
    return static_cast<std::uint8_t>(std::min(std::floor(d01 * 255.0), 254.0));
}

std::optional<Projection> project(const PinholeCamera& camera, const Vec3& p)
{
    const Vec3 q = camera.to_camera(p);
    const double z_view = -q.z;
    if (!(z_view >= camera.near && z_view < camera.far)) {
        return std::nullopt;
    }
    const double f = camera.focal_px();
    const double u = f * (q.x / z_view) + camera.width / 2.0;
    const double v = -f * (q.y / z_view) + camera.height / 2.0;
    const double px = std::floor(u);
    const double py = std::floor(v);
    if (!(px >= 0.0 && px < camera.width && py >= 0.0 && py < camera.height)) {
        return std::nullopt;
    }
    return Projection{static_cast<int>(px), static_cast<int>(py), z_view};
}

PackedFramebuffer::PackedFramebuffer(int width, int height)
    : width_(width), height_(height), cells_(static_cast<std::size_t>(width) * height, empty_cell)
{
    if (width < 1 || height < 1) throw std::invalid_argument("framebuffer size must be positive");
}

void PackedFramebuffer::clear() { std::fill(cells_.begin(), cells_.end(), empty_cell); }

void PackedFramebuffer::merge_min(std::size_t index, std::uint32_t value)
{
    std::atomic_ref<std::uint32_t> cell(cells_[index]);
    std::uint32_t current = cell.load(std::memory_order_relaxed);
    while (value < current && !cell.compare_exchange_weak(current, value, std::memory_order_relaxed)) {
    }
}

void splat_indices(PackedFramebuffer& fb, const PinholeCamera& camera, const PointCloudFrame& frame,
                   std::span<const std::size_t> indices)
{
    if (fb.width() != camera.width || fb.height() != camera.height) {
        throw std::invalid_argument("framebuffer and camera dimensions differ");
    }
    for (std::size_t i : indices) {
        const auto proj = project(camera, frame.positions[i].to_double());
        if (!proj) continue;
        const auto depth = quantize_depth(proj->z_view, camera.near, camera.far);
        if (!depth) continue;
        const std::size_t cell = static_cast<std::size_t>(proj->y) * fb.width() + proj->x;
        fb.merge_min(cell, pack_cell(*depth, frame.colors[i]));
    }
}

void splat_points(PackedFramebuffer& fb, const PinholeCamera& camera, const PointCloudFrame& frame, unsigned workers)
{
    std::vector<std::size_t> order(frame.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::span<const std::size_t> all(order);

    workers = std::max(1u, workers);
    if (workers == 1 || frame.size() < 2) {
        splat_indices(fb, camera, frame, all);
        return;
    }
    const std::size_t chunk = (order.size() + workers - 1) / workers;
    std::vector<std::jthread> pool;
    for (std::size_t begin = 0; begin < order.size(); begin += chunk) {
        const std::size_t n = std::min(chunk, order.size() - begin);
        pool.emplace_back([&, begin, n] { splat_indices(fb, camera, frame, all.subspan(begin, n)); });
    }
}

void TriangleMesh::check() const
{
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        for (std::uint32_t idx : triangles[t]) {
            if (idx >= vertices.size()) {
                throw std::invalid_argument("triangle " + std::to_string(t) + " references vertex " +
                                            std::to_string(idx) + " of " + std::to_string(vertices.size()));
            }
        }
    }
}

TriangleMesh TriangleMesh::transformed(const RigidPose& pose) const
{
    TriangleMesh out = *this;
    for (Vec3& v : out.vertices) v = pose.transform_point(v);
    return out;
}

GeometryBuffers::GeometryBuffers(int w, int h, Rgb8 background)
    : width(w), height(h), color(static_cast<std::size_t>(w) * h, background), depth(static_cast<std::size_t>(w) * h, 1.0f)
{
    if (w < 1 || h < 1) throw std::invalid_argument("geometry buffer size must be positive");
}

namespace {

// Camera-space vertex: x right, y up, depth along the view direction.
struct ClipVertex {
    double x;
    double y;
    double depth;

    bool operator<(const ClipVertex& o) const
    {
        if (x != o.x) return x < o.x;
        if (y != o.y) return y < o.y;
        return depth < o.depth;
    }
};

// Plane a*x + b*y + c*depth + d >= 0 keeps the vertex.
struct ClipPlane {
    double a, b, c, d;
    double distance(const ClipVertex& v) const { return a * v.x + b * v.y + c * v.depth + d; }
};

// The intersection is always computed from the lexicographically smaller
// endpoint so that triangles sharing an edge produce identical vertices.
ClipVertex intersect(const ClipPlane& plane, const ClipVertex& p, const ClipVertex& q)
{
    const ClipVertex& a = p < q ? p : q;
    const ClipVertex& b = p < q ? q : p;
    const double da = plane.distance(a);
    const double db = plane.distance(b);
    const double t = da / (da - db);
    return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, a.depth + (b.depth - a.depth) * t};
}

std::vector<ClipVertex> clip_polygon(const std::vector<ClipVertex>& poly, const ClipPlane& plane)
{
    std::vector<ClipVertex> out;
    if (poly.empty()) return out;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const ClipVertex& cur = poly[i];
        const ClipVertex& nxt = poly[(i + 1) % poly.size()];
        const bool cur_in = plane.distance(cur) >= 0.0;
        const bool nxt_in = plane.distance(nxt) >= 0.0;
        if (cur_in) out.push_back(cur);
        if (cur_in != nxt_in) out.push_back(intersect(plane, cur, nxt));
    }
    return out;
}

constexpr double subpixel_scale = 256.0;

struct ScreenVertex {
    std::int64_t x;  // fixed point, 8 fractional bits
    std::int64_t y;
    double inv_depth;
};

std::int64_t edge_function(const ScreenVertex& a, const ScreenVertex& b, std::int64_t px, std::int64_t py)
{
    return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

// Edge a->b owns pixels lying exactly on it iff its inward normal points to
// +x, or it is horizontal with the interior below it (+y).
bool owns_boundary(const ScreenVertex& a, const ScreenVertex& b)
{
    const std::int64_t nx = -(b.y - a.y);
    const std::int64_t ny = b.x - a.x;
    return nx > 0 || (nx == 0 && ny > 0);
}

void fill_triangle(GeometryBuffers& gb, const PinholeCamera& cam, ScreenVertex v0, ScreenVertex v1, ScreenVertex v2,
                   Rgb8 color)
{
    std::int64_t area = edge_function(v0, v1, v2.x, v2.y);
    if (area == 0) return;
    if (area < 0) {
        std::swap(v1, v2);
        area = -area;
    }
    const ScreenVertex* edges[3][2] = {{&v1, &v2}, {&v2, &v0}, {&v0, &v1}};
    std::int64_t bias[3];
    for (int e = 0; e < 3; ++e) {
        bias[e] = owns_boundary(*edges[e][0], *edges[e][1]) ? 0 : 1;
    }

    const auto scale = static_cast<std::int64_t>(subpixel_scale);
    const std::int64_t min_x = std::min({v0.x, v1.x, v2.x});
    const std::int64_t max_x = std::max({v0.x, v1.x, v2.x});
    const std::int64_t min_y = std::min({v0.y, v1.y, v2.y});
    const std::int64_t max_y = std::max({v0.y, v1.y, v2.y});
    // Pixel px has its centre at (px + 0.5) * scale.
    auto first_pixel = [&](std::int64_t lo) {
        const double p = std::ceil((static_cast<double>(lo) - scale / 2) / scale);
        return static_cast<int>(std::max(0.0, p));
    };
    auto last_pixel = [&](std::int64_t hi, int limit) {
        const double p = std::floor((static_cast<double>(hi) - scale / 2) / scale);
        return static_cast<int>(std::min(static_cast<double>(limit - 1), p));
    };
    const int x0 = first_pixel(min_x);
    const int x1 = last_pixel(max_x, gb.width);
    const int y0 = first_pixel(min_y);
    const int y1 = last_pixel(max_y, gb.height);

    const double inv_area = 1.0 / static_cast<double>(area);
    const double range = cam.far - cam.near;
    for (int py = y0; py <= y1; ++py) {
        const std::int64_t cy = std::int64_t{py} * scale + scale / 2;
        for (int px = x0; px <= x1; ++px) {
            const std::int64_t cx = std::int64_t{px} * scale + scale / 2;
            const std::int64_t w0 = edge_function(v1, v2, cx, cy);
            const std::int64_t w1 = edge_function(v2, v0, cx, cy);
            const std::int64_t w2 = edge_function(v0, v1, cx, cy);
            if (w0 < bias[0] || w1 < bias[1] || w2 < bias[2]) continue;

            const double inv_depth =
                (static_cast<double>(w0) * v0.inv_depth + static_cast<double>(w1) * v1.inv_depth +
                 static_cast<double>(w2) * v2.inv_depth) *
                inv_area;
            const double depth = 1.0 / inv_depth;
            const double d01 = std::max(0.0, (depth - cam.near) / range);
            if (!(d01 < 1.0)) continue;
            const std::size_t idx = static_cast<std::size_t>(py) * gb.width + px;
            const auto d = static_cast<float>(d01);
            if (d < gb.depth[idx]) {
                gb.depth[idx] = d;
                gb.color[idx] = color;
            }
        }
    }
}

Rgb8 shade(Rgb8 base, double factor)
{
    auto ch = [&](std::uint8_t c) { return static_cast<std::uint8_t>(std::lround(c * factor)); };
    return {ch(base.r), ch(base.g), ch(base.b)};
}

}  // namespace

void rasterize_mesh(GeometryBuffers& gb, const PinholeCamera& cam, const TriangleMesh& mesh)
{
    if (gb.width != cam.width || gb.height != cam.height) {
        throw std::invalid_argument("geometry buffers and camera dimensions differ");
    }
    mesh.check();

    const double f = cam.focal_px();
    const double guard_x = cam.width / 2.0 + std::max(cam.width, cam.height);
    const double guard_y = cam.height / 2.0 + std::max(cam.width, cam.height);
    // Near plane, then a guard band well outside the image on each side so
    // fixed-point screen coordinates stay small.
    const ClipPlane planes[] = {
        {0.0, 0.0, 1.0, -cam.near},
        {f, 0.0, guard_x, 0.0},
        {-f, 0.0, guard_x, 0.0},
        {0.0, -f, guard_y, 0.0},
        {0.0, f, guard_y, 0.0},
    };

    std::vector<ClipVertex> cam_vertices;
    cam_vertices.reserve(mesh.vertices.size());
    for (const Vec3& v : mesh.vertices) {
        const Vec3 q = cam.to_camera(v);
        cam_vertices.push_back({q.x, q.y, -q.z});
    }

    for (const auto& tri : mesh.triangles) {
        const Vec3& a = mesh.vertices[tri[0]];
        const Vec3& b = mesh.vertices[tri[1]];
        const Vec3& c = mesh.vertices[tri[2]];
        const Vec3 n = cross(b - a, c - a);
        const double n_len = norm(n);
        if (n_len == 0.0) continue;
        const double lambert = std::abs(dot(n / n_len, cam.forward));
        const Rgb8 color = shade(mesh.base_color, std::clamp(lambert, ambient_floor, 1.0));

        std::vector<ClipVertex> poly{cam_vertices[tri[0]], cam_vertices[tri[1]], cam_vertices[tri[2]]};
        for (const ClipPlane& plane : planes) {
            poly = clip_polygon(poly, plane);
        }
        if (poly.size() < 3) continue;

        std::vector<ScreenVertex> screen;
        screen.reserve(poly.size());
        for (const ClipVertex& v : poly) {
            const double depth = std::max(v.depth, cam.near);
            const double u = f * (v.x / depth) + cam.width / 2.0;
            const double w = -f * (v.y / depth) + cam.height / 2.0;
            screen.push_back({std::llround(u * subpixel_scale), std::llround(w * subpixel_scale), 1.0 / depth});
        }
        for (std::size_t i = 1; i + 1 < screen.size(); ++i) {
            fill_triangle(gb, cam, screen[0], screen[i], screen[i + 1], color);
        }
    }
}

RgbImage resolve(const PackedFramebuffer& fb, const GeometryBuffers& gb)
{
    if (fb.width() != gb.width || fb.height() != gb.height) {
        throw std::invalid_argument("point and geometry buffers differ in size");
    }
    RgbImage out(gb.width, gb.height);
    const auto cells = fb.cells();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        Rgb8 c = gb.color[i];
        const std::uint32_t v = cells[i];
        if (v != empty_cell && cell_depth(v) / 255.0 < static_cast<double>(gb.depth[i])) {
            c = cell_color(v);
        }
        out.pixels[i * 3] = c.r;
        out.pixels[i * 3 + 1] = c.g;
        out.pixels[i * 3 + 2] = c.b;
    }
    return out;
}

RgbImage render_mono(const RenderScene& scene, const PinholeCamera& camera, unsigned workers)
{
    GeometryBuffers gb(camera.width, camera.height, scene.background);
    for (const TriangleMesh& mesh : scene.meshes) {
        rasterize_mesh(gb, camera, mesh);
    }
    PackedFramebuffer fb(camera.width, camera.height);
    if (scene.points != nullptr) {
        splat_points(fb, camera, *scene.points, workers);
    }
    return resolve(fb, gb);
}

RgbImage render_stereo(const RenderScene& scene, const PinholeCamera& center, double ipd, unsigned workers)
{
    const RgbImage left = render_mono(scene, center.shifted(-ipd / 2.0), workers);
    const RgbImage right = render_mono(scene, center.shifted(ipd / 2.0), workers);
    RgbImage out(2 * center.width, center.height);
    const std::size_t row = static_cast<std::size_t>(center.width) * 3;
    for (int y = 0; y < center.height; ++y) {
        const std::size_t src = static_cast<std::size_t>(y) * row;
        const std::size_t dst = static_cast<std::size_t>(y) * row * 2;
        std::copy_n(left.pixels.begin() + src, row, out.pixels.begin() + dst);
        std::copy_n(right.pixels.begin() + src, row, out.pixels.begin() + dst + row);
    }
    return out;
}

Bytes write_ppm(const RgbImage& image)
{
    const std::string header =
        "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    Bytes out(header.begin(), header.end());
    out.insert(out.end(), image.pixels.begin(), image.pixels.end());
    return out;
}

RgbImage read_ppm(ByteView bytes)
{
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_uint = [&]() -> long {
        skip_space();
        long v = 0;
        const std::size_t start = pos;
        while (pos < bytes.size() && std::isdigit(bytes[pos]) && v < 1'000'000) v = v * 10 + (bytes[pos++] - '0');
        if (pos == start) throw FormatError("malformed PPM header");
        return v;
    };
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw FormatError("not a binary PPM (P6)");
    pos = 2;
    const long w = read_uint();
    const long h = read_uint();
    const long maxval = read_uint();
    if (w < 1 || h < 1) throw FormatError("PPM dimensions must be positive");
    if (maxval != 255) throw FormatError("only maxval 255 PPM is supported");
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError("malformed PPM header");
    ++pos;
    RgbImage img(static_cast<int>(w), static_cast<int>(h));
    if (bytes.size() - pos != img.pixels.size()) {
        throw FormatError("PPM pixel data: expected " + std::to_string(img.pixels.size()) + " bytes, got " +
                          std::to_string(bytes.size() - pos));
    }
    std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end(), img.pixels.begin());
    return img;
}

}  // namespace twin
