#pragma once

#include "twin/bytes.hpp"
#include "twin/render.hpp"

#include <string>
#include <string_view>

namespace twin {

/// Reads "v" and "f" records of a Wavefront OBJ; polygons are fan-triangulated,
/// negative (relative) indices and "v/vt/vn" forms are accepted. Everything
/// else is ignored. Throws FormatError.
TriangleMesh parse_obj(std::string_view text, Rgb8 base_color = {180, 180, 180});

std::string write_obj(const TriangleMesh& mesh);

/// Axis-aligned box with inward- and outward-facing use alike (shading is two-sided).
TriangleMesh make_box(const Vec3& min, const Vec3& max, Rgb8 color);

/// Procedural drill in its local frame: a handle behind the origin and a bit
/// along +Z ending at the tool tip (z = tip_length).
TriangleMesh make_drill_mesh(double tip_length, Rgb8 color);

}  // namespace twin
