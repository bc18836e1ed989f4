#include "twin/mesh_io.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace twin {

namespace {

std::vector<std::string_view> tokens(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t s = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > s) out.push_back(line.substr(s, i - s));
    }
    return out;
}

double to_double(std::string_view s, std::size_t line_no)
{
    // from_chars for double is unavailable on some toolchains; strtod needs a terminator.
    const std::string tmp(s);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (end != tmp.c_str() + tmp.size()) {
        throw FormatError("OBJ line " + std::to_string(line_no) + ": bad number \"" + tmp + "\"");
    }
    return v;
}

}  // namespace

TriangleMesh parse_obj(std::string_view text, Rgb8 base_color)
{
    TriangleMesh mesh;
    mesh.base_color = base_color;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;

        const auto tok = tokens(line);
        if (tok.empty() || tok[0].front() == '#') continue;
        if (tok[0] == "v") {
            if (tok.size() < 4) throw FormatError("OBJ line " + std::to_string(line_no) + ": vertex needs 3 coordinates");
            mesh.vertices.push_back({to_double(tok[1], line_no), to_double(tok[2], line_no), to_double(tok[3], line_no)});
        } else if (tok[0] == "f") {
            if (tok.size() < 4) throw FormatError("OBJ line " + std::to_string(line_no) + ": face needs 3 vertices");
            std::vector<std::uint32_t> idx;
            for (std::size_t k = 1; k < tok.size(); ++k) {
                const std::string_view ref = tok[k].substr(0, tok[k].find('/'));
                long v = 0;
                const auto res = std::from_chars(ref.data(), ref.data() + ref.size(), v);
                if (res.ec != std::errc{} || res.ptr != ref.data() + ref.size() || v == 0) {
                    throw FormatError("OBJ line " + std::to_string(line_no) + ": bad face index");
                }
                const long n = static_cast<long>(mesh.vertices.size());
                const long resolved = v > 0 ? v - 1 : n + v;
                if (resolved < 0 || resolved >= n) {
                    throw FormatError("OBJ line " + std::to_string(line_no) + ": face index out of range");
                }
                idx.push_back(static_cast<std::uint32_t>(resolved));
            }
            for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
                mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
            }
        }
    }
    return mesh;
}

std::string write_obj(const TriangleMesh& mesh)
{
    std::string out;
    char buf[128];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
        out += buf;
    }
    for (const auto& t : mesh.triangles) {
        std::snprintf(buf, sizeof buf, "f %u %u %u\n", t[0] + 1, t[1] + 1, t[2] + 1);
        out += buf;
    }
    return out;
}

TriangleMesh make_box(const Vec3& lo, const Vec3& hi, Rgb8 color)
{
    TriangleMesh m;
    m.base_color = color;
    for (int i = 0; i < 8; ++i) {
        m.vertices.push_back({(i & 1) ? hi.x : lo.x, (i & 2) ? hi.y : lo.y, (i & 4) ? hi.z : lo.z});
    }
    // Two triangles per face, outward winding.
    m.triangles = {
        {0, 2, 3}, {0, 3, 1},  // z = lo
        {4, 5, 7}, {4, 7, 6},  // z = hi
        {0, 1, 5}, {0, 5, 4},  // y = lo
        {2, 6, 7}, {2, 7, 3},  // y = hi
        {0, 4, 6}, {0, 6, 2},  // x = lo
        {1, 3, 7}, {1, 7, 5},  // x = hi
    };
    return m;
}

TriangleMesh make_drill_mesh(double tip_length, Rgb8 color)
{
    const double bit = 0.003;
    const double body = 0.018;
    TriangleMesh handle = make_box({-body, -body, -0.12}, {body, body, 0.0}, color);
    const TriangleMesh shaft = make_box({-bit, -bit, 0.0}, {bit, bit, tip_length}, color);
    const auto offset = static_cast<std::uint32_t>(handle.vertices.size());
    handle.vertices.insert(handle.vertices.end(), shaft.vertices.begin(), shaft.vertices.end());
    for (auto t : shaft.triangles) {
        handle.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
    }
    return handle;
}

}  // namespace twin
