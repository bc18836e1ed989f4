#pragma once

#include "twin/bytes.hpp"
#include "twin/math.hpp"

#include <cstddef>
#include <vector>

namespace twin {

struct Aabb {
    Vec3f min;
    Vec3f max;

    /// Closed-interval containment on every axis.
    constexpr bool contains(const Vec3f& p) const
    {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z && p.z <= max.z;
    }

    friend constexpr bool operator==(const Aabb&, const Aabb&) = default;
};

/// One animation frame of the dynamic point cloud. positions[i] has colors[i].
struct PointCloudFrame {
    Aabb bbox;
    std::vector<Vec3f> positions;
    std::vector<Rgb8> colors;

    std::size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }

    friend bool operator==(const PointCloudFrame&, const PointCloudFrame&) = default;
};

/// Tight bounds of a point set; all-zero box for an empty set.
Aabb bounds_of(const std::vector<Vec3f>& positions);

/// Keeps exactly the points inside box (closed). The result's bbox is box.
PointCloudFrame crop_aabb(const PointCloudFrame& frame, const Aabb& box);

struct VoxelGridParams {
    Vec3 origin;
    double voxel_size = 0.01;
};

/// One centroid per occupied voxel with per-channel mean color (rounded half
/// up). Voxel of p is floor((p - origin) / voxel_size) per axis. Output is
/// sorted by voxel index with z most significant, then y, then x. The output
/// keeps the input bbox.
PointCloudFrame voxel_downsample(const PointCloudFrame& frame, const VoxelGridParams& params);

/// Parses an ASCII or binary little-endian PLY with x/y/z and red/green/blue
/// vertex properties. Throws FormatError.
PointCloudFrame import_ply(ByteView bytes);

/// Writes a binary little-endian PLY (float32 xyz, uint8 rgb).
Bytes export_ply(const PointCloudFrame& frame, bool ascii = false);

// SPCF frame file layout (all little-endian):
//   "SPC1" | u32 count | f32 bbox min xyz, max xyz | count * u16 xyz | count * u8 rgb
inline constexpr std::size_t spcf_header_size = 32;
inline constexpr std::size_t spcf_bytes_per_point = 9;

Bytes encode_spcf(const PointCloudFrame& frame);

/// Throws FormatError on bad magic, truncation, or trailing bytes.
PointCloudFrame decode_spcf(ByteView bytes);

}  // namespace twin
