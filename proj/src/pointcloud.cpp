#include "twin/pointcloud.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <tuple>

namespace twin {

Aabb bounds_of(const std::vector<Vec3f>& positions)
{
    if (positions.empty()) {
        return {};
    }
    Aabb box{positions.front(), positions.front()};
    for (const Vec3f& p : positions) {
        for (int a = 0; a < 3; ++a) {
            box.min[a] = std::min(box.min[a], p[a]);
            box.max[a] = std::max(box.max[a], p[a]);
        }
    }
    return box;
}

PointCloudFrame crop_aabb(const PointCloudFrame& frame, const Aabb& box)
{
    PointCloudFrame out;
    out.bbox = box;
    for (std::size_t i = 0; i < frame.size(); ++i) {
        if (box.contains(frame.positions[i])) {
            out.positions.push_back(frame.positions[i]);
            out.colors.push_back(frame.colors[i]);
        }
    }
    return out;
}

namespace {

using VoxelKey = std::tuple<std::int64_t, std::int64_t, std::int64_t>;  // (z, y, x)

struct VoxelAccum {
    std::array<double, 3> sum{};
    Vec3f lo;
    Vec3f hi;
    std::array<std::uint64_t, 3> color_sum{};
    std::uint64_t count = 0;
};

std::int64_t voxel_coord(float p, double origin, double size)
{
    return static_cast<std::int64_t>(std::floor((static_cast<double>(p) - origin) / size));
}

std::uint8_t mean_half_up(std::uint64_t sum, std::uint64_t n)
{
    // floor(sum / n + 1/2) in exact integer arithmetic
    return static_cast<std::uint8_t>((2 * sum + n) / (2 * n));
}

}  // namespace

PointCloudFrame voxel_downsample(const PointCloudFrame& frame, const VoxelGridParams& params)
{
    std::map<VoxelKey, VoxelAccum> voxels;
    for (std::size_t i = 0; i < frame.size(); ++i) {
        const Vec3f& p = frame.positions[i];
        const VoxelKey key{voxel_coord(p.z, params.origin.z, params.voxel_size),
                           voxel_coord(p.y, params.origin.y, params.voxel_size),
                           voxel_coord(p.x, params.origin.x, params.voxel_size)};
        auto [it, inserted] = voxels.try_emplace(key);
        VoxelAccum& acc = it->second;
        if (inserted) {
            acc.lo = p;
            acc.hi = p;
        }
        for (int a = 0; a < 3; ++a) {
            acc.sum[a] += p[a];
            acc.lo[a] = std::min(acc.lo[a], p[a]);
            acc.hi[a] = std::max(acc.hi[a], p[a]);
        }
        acc.color_sum[0] += frame.colors[i].r;
        acc.color_sum[1] += frame.colors[i].g;
        acc.color_sum[2] += frame.colors[i].b;
        ++acc.count;
    }

    PointCloudFrame out;
    out.bbox = frame.bbox;
    out.positions.reserve(voxels.size());
    out.colors.reserve(voxels.size());
    for (const auto& [key, acc] : voxels) {
        Vec3f c;
        for (int a = 0; a < 3; ++a) {
            const auto mean = static_cast<float>(acc.sum[a] / static_cast<double>(acc.count));
            // Rounding may not push the centroid outside the voxel's points.
            c[a] = std::clamp(mean, acc.lo[a], acc.hi[a]);
        }
        out.positions.push_back(c);
        out.colors.push_back({mean_half_up(acc.color_sum[0], acc.count), mean_half_up(acc.color_sum[1], acc.count),
                              mean_half_up(acc.color_sum[2], acc.count)});
    }
    return out;
}

Bytes encode_spcf(const PointCloudFrame& frame)
{
    if (frame.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw FormatError("SPCF supports at most 2^32-1 points");
    }
    Bytes out;
    out.reserve(spcf_header_size + frame.size() * spcf_bytes_per_point);
    ByteWriter w(out);
    w.tag("SPC1");
    w.u32(static_cast<std::uint32_t>(frame.size()));
    for (int a = 0; a < 3; ++a) w.f32(frame.bbox.min[a]);
    for (int a = 0; a < 3; ++a) w.f32(frame.bbox.max[a]);

    for (const Vec3f& p : frame.positions) {
        for (int a = 0; a < 3; ++a) {
            const double lo = frame.bbox.min[a];
            const double extent = static_cast<double>(frame.bbox.max[a]) - lo;
            double q = 0.0;
            if (extent > 0.0) {
                q = std::round((static_cast<double>(p[a]) - lo) / extent * 65535.0);
            }
            w.u16(static_cast<std::uint16_t>(std::clamp(q, 0.0, 65535.0)));
        }
    }
    for (const Rgb8& c : frame.colors) {
        w.u8(c.r);
        w.u8(c.g);
        w.u8(c.b);
    }
    return out;
}

PointCloudFrame decode_spcf(ByteView bytes)
{
    ByteReader r(bytes);
    if (!r.match("SPC1")) {
        throw FormatError("bad magic: not an SPCF frame");
    }
    if (bytes.size() < spcf_header_size) {
        throw FormatError("truncated SPCF header: expected " + std::to_string(spcf_header_size) + " bytes, got " +
                          std::to_string(bytes.size()));
    }
    const std::uint32_t count = r.read<std::uint32_t>();
    const std::size_t expected = spcf_header_size + std::size_t{count} * spcf_bytes_per_point;
    if (bytes.size() != expected) {
        throw FormatError(std::string(bytes.size() < expected ? "truncated" : "oversized") +
                          " SPCF payload: expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(bytes.size()));
    }

    PointCloudFrame f;
    for (int a = 0; a < 3; ++a) f.bbox.min[a] = r.read<float>();
    for (int a = 0; a < 3; ++a) f.bbox.max[a] = r.read<float>();
    for (int a = 0; a < 3; ++a) {
        if (!(f.bbox.min[a] <= f.bbox.max[a])) {
            throw FormatError("invalid SPCF bbox: min exceeds max on axis " + std::to_string(a));
        }
    }

    f.positions.resize(count);
    f.colors.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        for (int a = 0; a < 3; ++a) {
            const double lo = f.bbox.min[a];
            const double extent = static_cast<double>(f.bbox.max[a]) - lo;
            const double q = r.read<std::uint16_t>();
            const auto v = static_cast<float>(lo + q / 65535.0 * extent);
            f.positions[i][a] = std::clamp(v, f.bbox.min[a], f.bbox.max[a]);
        }
    }
    for (std::uint32_t i = 0; i < count; ++i) {
        f.colors[i].r = r.read<std::uint8_t>();
        f.colors[i].g = r.read<std::uint8_t>();
        f.colors[i].b = r.read<std::uint8_t>();
    }
    return f;
}

}  // namespace twin
