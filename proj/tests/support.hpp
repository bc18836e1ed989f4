#pragma once

#include "twin/pointcloud.hpp"
#include "twin/render.hpp"
#include "twin/trajectory.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

namespace twin::test {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t bits() { return engine_(); }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
    std::uint8_t byte() { return static_cast<std::uint8_t>(engine_() >> 56); }
    Rgb8 color() { return {byte(), byte(), byte()}; }
    Vec3 vec(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }
    Vec3f vecf(const Aabb& box)
    {
        return {static_cast<float>(uniform(box.min.x, box.max.x)), static_cast<float>(uniform(box.min.y, box.max.y)),
                static_cast<float>(uniform(box.min.z, box.max.z))};
    }
    Quat rotation()
    {
        // Uniform random unit quaternion (Shoemake).
        const double u1 = uniform(), u2 = uniform(), u3 = uniform();
        const double a = std::sqrt(1 - u1), b = std::sqrt(u1);
        return {b * std::cos(2 * pi * u3), a * std::sin(2 * pi * u2), a * std::cos(2 * pi * u2), b * std::sin(2 * pi * u3)};
    }
    RigidPose pose(double extent = 1.0) { return RigidPose(vec(-extent, extent), rotation()); }

private:
    std::mt19937_64 engine_;
};

inline PointCloudFrame random_frame(Rng& rng, std::size_t n, const Aabb& box)
{
    PointCloudFrame f;
    f.bbox = box;
    for (std::size_t i = 0; i < n; ++i) {
        f.positions.push_back(rng.vecf(box));
        f.colors.push_back(rng.color());
    }
    return f;
}

/// Deletes the directory on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("twin-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Brute-force splat: collect every contribution per pixel, sort, keep the smallest.
inline std::vector<std::uint32_t> oracle_splat(const PinholeCamera& cam, const PointCloudFrame& frame)
{
    std::map<std::size_t, std::vector<std::uint32_t>> per_pixel;
    const double f = (cam.height / 2.0) / std::tan(cam.vertical_fov * pi / 360.0);
    for (std::size_t i = 0; i < frame.size(); ++i) {
        const Vec3 d = frame.positions[i].to_double() - cam.eye;
        const double cx = dot(d, cam.right);
        const double cy = dot(d, cam.up);
        const double z = dot(d, cam.forward);
        if (z < cam.near || z >= cam.far) continue;
        const double u = f * (cx / z) + cam.width / 2.0;
        const double v = -f * (cy / z) + cam.height / 2.0;
        if (u < 0 || v < 0 || u >= cam.width || v >= cam.height) continue;
        const double d01 = (z - cam.near) / (cam.far - cam.near);
        if (d01 >= 1.0) continue;
        const auto depth = static_cast<std::uint32_t>(std::min(254.0, std::floor(d01 * 255.0)));
        const Rgb8 c = frame.colors[i];
        const std::uint32_t packed = depth * 0x1000000u + c.r * 0x10000u + c.g * 0x100u + c.b;
        per_pixel[static_cast<std::size_t>(std::floor(v)) * cam.width + static_cast<std::size_t>(std::floor(u))]
            .push_back(packed);
    }
    std::vector<std::uint32_t> cells(static_cast<std::size_t>(cam.width) * cam.height, 0xFFFFFFFFu);
    for (auto& [idx, values] : per_pixel) {
        std::sort(values.begin(), values.end());
        cells[idx] = values.front();
    }
    return cells;
}

/// Compositing rule written out per pixel, independent of resolve().
inline RgbImage oracle_resolve(const std::vector<std::uint32_t>& cells, const GeometryBuffers& gb)
{
    RgbImage out(gb.width, gb.height);
    for (int y = 0; y < gb.height; ++y) {
        for (int x = 0; x < gb.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * gb.width + x;
            const std::uint32_t v = cells[i];
            Rgb8 c = gb.color[i];
            if (v != 0xFFFFFFFFu && static_cast<double>(v >> 24) / 255.0 < gb.depth[i]) {
                c = {static_cast<std::uint8_t>((v >> 16) & 0xFF), static_cast<std::uint8_t>((v >> 8) & 0xFF),
                     static_cast<std::uint8_t>(v & 0xFF)};
            }
            out.set(x, y, c);
        }
    }
    return out;
}

/// Minimal P6 reader written without the library's parser: header tokens,
/// then raw bytes.
inline RgbImage oracle_read_ppm(const Bytes& bytes)
{
    std::string text(bytes.begin(), bytes.end());
    std::size_t pos = 0;
    auto token = [&] {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        const std::size_t start = pos;
        while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        return text.substr(start, pos - start);
    };
    if (token() != "P6") return {};
    const int w = std::stoi(token());
    const int h = std::stoi(token());
    if (token() != "255") return {};
    ++pos;
    RgbImage img(w, h);
    std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end(), img.pixels.begin());
    return img;
}

}  // namespace twin::test
