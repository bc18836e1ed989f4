#pragma once

#include "twin/math.hpp"

#include <cstdint>
#include <filesystem>

namespace twin {

/// Parameters of the generated stand-in for a captured surgery: a box room
/// with a table and anatomy block, a swaying point-cloud "surgeon", and a
/// drill that spirals onto an entry point and then dwells.
struct SyntheticSceneSpec {
    int frame_count = 30;
    double anim_fps = 30.0;
    std::size_t points_per_frame = 20000;
    Vec3 room{4.0, 3.0, 4.0};  // width (x), height (y), depth (z), meters
    double voxel_size = 0.01;
    double helix_radius = 0.12;
    double helix_turns = 2.0;
    double approach_fraction = 0.6;  // share of the clip spent approaching
    double tip_length = 0.15;
    std::uint64_t seed = 42;
};

/// Writes scene.json, frames/, trajectories/ and meshes/ under out_dir.
/// Output bytes depend only on the spec.
void generate_synthetic_scene(const SyntheticSceneSpec& spec, const std::filesystem::path& out_dir);

}  // namespace twin
