#pragma once

#include "twin/bytes.hpp"
#include "twin/math.hpp"
#include "twin/pointcloud.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace twin {

struct CameraConfig;
class RigidPose;

/// Right-handed pinhole camera looking along -Z in its own frame, +Y up.
/// Pixel (0, 0) is the top-left corner of the image.
struct PinholeCamera {
    Vec3 eye;
    Vec3 right{1.0, 0.0, 0.0};
    Vec3 up{0.0, 1.0, 0.0};
    Vec3 forward{0.0, 0.0, -1.0};
    double vertical_fov = 60.0;  // degrees
    int width = 1024;
    int height = 1024;
    double near = 0.05;
    double far = 6.0;

    /// Throws std::invalid_argument for degenerate inputs.
    static PinholeCamera look_at(const Vec3& eye, const Vec3& target, const Vec3& up_hint, double vertical_fov,
                                 int width, int height, double near, double far);
    static PinholeCamera from_config(const CameraConfig& config, double near, double far);

    double focal_px() const;

    /// Same orientation, eye moved by `offset` meters along the right axis.
    PinholeCamera shifted(double offset) const;

    /// World point in camera coordinates (x right, y up, z backwards).
    Vec3 to_camera(const Vec3& p) const
    {
        const Vec3 d = p - eye;
        return {dot(d, right), dot(d, up), -dot(d, forward)};
    }
};

struct Projection {
    int x = 0;
    int y = 0;
    double z_view = 0.0;  // distance along the viewing direction
};

/// Linear depth byte for z_view in [near, far); nullopt otherwise.
std::optional<std::uint8_t> quantize_depth(double z_view, double near, double far);

/// Pixel and view depth of p, or nullopt if p is outside [near, far) or off-image.
std::optional<Projection> project(const PinholeCamera& camera, const Vec3& p);

// Packed cell: depth byte in bits 24..31, then R, G, B. Integer minimum keeps
// the nearest point; equal depths break ties on the color bits.
inline constexpr std::uint32_t empty_cell = 0xFFFFFFFFu;

constexpr std::uint32_t pack_cell(std::uint8_t depth, Rgb8 c)
{
    return (std::uint32_t{depth} << 24) | (std::uint32_t{c.r} << 16) | (std::uint32_t{c.g} << 8) | c.b;
}
constexpr std::uint8_t cell_depth(std::uint32_t v) { return static_cast<std::uint8_t>(v >> 24); }
constexpr Rgb8 cell_color(std::uint32_t v)
{
    return {static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
}

class PackedFramebuffer {
public:
    PackedFramebuffer(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }
    std::uint32_t at(int x, int y) const { return cells_[static_cast<std::size_t>(y) * width_ + x]; }
    std::span<const std::uint32_t> cells() const { return cells_; }

    void clear();

    /// cell = min(cell, value). Safe to call concurrently from several threads.
    void merge_min(std::size_t index, std::uint32_t value);

    friend bool operator==(const PackedFramebuffer&, const PackedFramebuffer&) = default;

private:
    int width_;
    int height_;
    std::vector<std::uint32_t> cells_;
};

/// Splats the points at `indices` (in that order) into fb.
void splat_indices(PackedFramebuffer& fb, const PinholeCamera& camera, const PointCloudFrame& frame,
                   std::span<const std::size_t> indices);

/// Single-pixel splats of every point, split across `workers` threads.
/// The result is bit-identical for any worker count.
void splat_points(PackedFramebuffer& fb, const PinholeCamera& camera, const PointCloudFrame& frame,
                  unsigned workers = 1);

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;
    Rgb8 base_color{180, 180, 180};

    /// Throws std::invalid_argument if an index is out of range.
    void check() const;
    TriangleMesh transformed(const RigidPose& pose) const;
};

/// Rasterized room geometry: colour plus linear depth in [0, 1], 1 meaning empty.
struct GeometryBuffers {
    GeometryBuffers(int width, int height, Rgb8 background = {});

    int width;
    int height;
    std::vector<Rgb8> color;
    std::vector<float> depth;
};

inline constexpr double ambient_floor = 0.2;

/// Flat headlight-shaded, two-sided, perspective-correct z-buffered fill with
/// a top-left ownership rule on shared edges.
void rasterize_mesh(GeometryBuffers& gb, const PinholeCamera& camera, const TriangleMesh& mesh);

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major RGB, top row first

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

    Rgb8 at(int x, int y) const
    {
        const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
        return {pixels[i], pixels[i + 1], pixels[i + 2]};
    }
    void set(int x, int y, Rgb8 c)
    {
        const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
        pixels[i] = c.r;
        pixels[i + 1] = c.g;
        pixels[i + 2] = c.b;
    }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Composites points over geometry: a point shows iff depth/255 < geometry depth.
RgbImage resolve(const PackedFramebuffer& fb, const GeometryBuffers& gb);

/// Everything visible at one instant. Meshes are already in world space.
struct RenderScene {
    std::vector<TriangleMesh> meshes;
    const PointCloudFrame* points = nullptr;
    Rgb8 background{};
};

RgbImage render_mono(const RenderScene& scene, const PinholeCamera& camera, unsigned workers = 1);

/// Side-by-side image (2 * width x height); left eye is shifted by -ipd/2
/// along the right axis and occupies the left half.
RgbImage render_stereo(const RenderScene& scene, const PinholeCamera& center, double ipd, unsigned workers = 1);

/// Binary P6, maxval 255.
Bytes write_ppm(const RgbImage& image);

/// Reads binary P6 with maxval 255. Throws FormatError.
RgbImage read_ppm(ByteView bytes);

}  // namespace twin
