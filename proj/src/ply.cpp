#include "twin/pointcloud.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace twin {

namespace {

enum class ScalarType { i8, u8, i16, u16, i32, u32, f32, f64 };

std::optional<ScalarType> parse_scalar_type(std::string_view s)
{
    if (s == "char" || s == "int8") return ScalarType::i8;
    if (s == "uchar" || s == "uint8") return ScalarType::u8;
    if (s == "short" || s == "int16") return ScalarType::i16;
    if (s == "ushort" || s == "uint16") return ScalarType::u16;
    if (s == "int" || s == "int32") return ScalarType::i32;
    if (s == "uint" || s == "uint32") return ScalarType::u32;
    if (s == "float" || s == "float32") return ScalarType::f32;
    if (s == "double" || s == "float64") return ScalarType::f64;
    return std::nullopt;
}

struct Property {
    std::string name;
    ScalarType type = ScalarType::f32;
    bool is_list = false;
    ScalarType count_type = ScalarType::u8;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> properties;
};

struct Header {
    bool ascii = false;
    std::vector<Element> elements;
    std::size_t body_offset = 0;
};

std::vector<std::string_view> split_ws(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

Header parse_header(ByteView bytes)
{
    const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    std::size_t pos = 0;
    auto next_line = [&]() -> std::optional<std::string_view> {
        if (pos >= text.size()) return std::nullopt;
        const std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            throw FormatError("PLY header is not terminated by end_header");
        }
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        return line;
    };

    auto first = next_line();
    if (!first || split_ws(*first) != std::vector<std::string_view>{"ply"}) {
        throw FormatError("not a PLY file: missing 'ply' signature");
    }

    Header h;
    bool have_format = false;
    while (true) {
        auto line = next_line();
        if (!line) throw FormatError("PLY header is not terminated by end_header");
        const auto tok = split_ws(*line);
        if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
        if (tok[0] == "end_header") break;
        if (tok[0] == "format") {
            if (tok.size() < 2) throw FormatError("malformed PLY format line");
            if (tok[1] == "ascii") {
                h.ascii = true;
            } else if (tok[1] == "binary_little_endian") {
                h.ascii = false;
            } else {
                throw FormatError("unsupported encoding: " + std::string(tok[1]));
            }
            have_format = true;
        } else if (tok[0] == "element") {
            if (tok.size() != 3) throw FormatError("malformed PLY element line");
            Element e;
            e.name = tok[1];
            const auto* end = tok[2].data() + tok[2].size();
            if (std::from_chars(tok[2].data(), end, e.count).ptr != end) {
                throw FormatError("malformed PLY element count: " + std::string(tok[2]));
            }
            h.elements.push_back(std::move(e));
        } else if (tok[0] == "property") {
            if (h.elements.empty()) throw FormatError("PLY property before any element");
            Property p;
            if (tok.size() == 5 && tok[1] == "list") {
                auto ct = parse_scalar_type(tok[2]);
                auto it = parse_scalar_type(tok[3]);
                if (!ct || !it) throw FormatError("unsupported PLY list property types");
                p.is_list = true;
                p.count_type = *ct;
                p.type = *it;
                p.name = tok[4];
            } else if (tok.size() == 3) {
                auto t = parse_scalar_type(tok[1]);
                if (!t) throw FormatError("unsupported PLY property type: " + std::string(tok[1]));
                p.type = *t;
                p.name = tok[2];
            } else {
                throw FormatError("malformed PLY property line");
            }
            h.elements.back().properties.push_back(std::move(p));
        } else {
            throw FormatError("unknown PLY header keyword: " + std::string(tok[0]));
        }
    }
    if (!have_format) throw FormatError("PLY header has no format line");
    h.body_offset = pos;
    return h;
}

double read_binary_scalar(ByteReader& r, ScalarType t)
{
    switch (t) {
    case ScalarType::i8: return r.read<std::int8_t>();
    case ScalarType::u8: return r.read<std::uint8_t>();
    case ScalarType::i16: return r.read<std::int16_t>();
    case ScalarType::u16: return r.read<std::uint16_t>();
    case ScalarType::i32: return r.read<std::int32_t>();
    case ScalarType::u32: return r.read<std::uint32_t>();
    case ScalarType::f32: return r.read<float>();
    case ScalarType::f64: return r.read<double>();
    }
    return 0.0;
}

struct VertexLayout {
    int x = -1, y = -1, z = -1, r = -1, g = -1, b = -1;
};

VertexLayout locate_vertex_properties(const Element& vertex)
{
    VertexLayout l;
    for (std::size_t i = 0; i < vertex.properties.size(); ++i) {
        const Property& p = vertex.properties[i];
        const int idx = static_cast<int>(i);
        int* slot = nullptr;
        bool color = false;
        if (p.name == "x") slot = &l.x;
        else if (p.name == "y") slot = &l.y;
        else if (p.name == "z") slot = &l.z;
        else if (p.name == "red") slot = &l.r, color = true;
        else if (p.name == "green") slot = &l.g, color = true;
        else if (p.name == "blue") slot = &l.b, color = true;
        if (slot == nullptr) continue;
        if (p.is_list) throw FormatError("PLY vertex property " + p.name + " must be a scalar");
        if (color && p.type != ScalarType::u8) {
            throw FormatError("PLY vertex property " + p.name + " must be uchar");
        }
        *slot = idx;
    }
    const std::pair<int, const char*> required[] = {{l.x, "x"},   {l.y, "y"},     {l.z, "z"},
                                                    {l.r, "red"}, {l.g, "green"}, {l.b, "blue"}};
    for (const auto& [idx, name] : required) {
        if (idx < 0) throw FormatError(std::string("missing required property: ") + name);
    }
    return l;
}

void store_vertex(PointCloudFrame& f, std::size_t i, const VertexLayout& l, const std::vector<double>& values)
{
    f.positions[i] = {static_cast<float>(values[l.x]), static_cast<float>(values[l.y]),
                      static_cast<float>(values[l.z])};
    auto channel = [&](int idx) {
        const double v = values[idx];
        if (!(v >= 0.0 && v <= 255.0)) throw FormatError("PLY color value out of range at vertex " + std::to_string(i));
        return static_cast<std::uint8_t>(v);
    };
    f.colors[i] = {channel(l.r), channel(l.g), channel(l.b)};
}

}  // namespace

PointCloudFrame import_ply(ByteView bytes)
{
    const Header h = parse_header(bytes);
    auto vertex_it = std::find_if(h.elements.begin(), h.elements.end(), [](const Element& e) {
        return e.name == "vertex";
    });
    if (vertex_it == h.elements.end()) {
        throw FormatError("PLY has no vertex element");
    }
    const VertexLayout layout = locate_vertex_properties(*vertex_it);

    PointCloudFrame f;
    f.positions.resize(vertex_it->count);
    f.colors.resize(vertex_it->count);

    const ByteView body = bytes.subspan(h.body_offset);
    if (h.ascii) {
        std::istringstream in(std::string(reinterpret_cast<const char*>(body.data()), body.size()));
        in.imbue(std::locale::classic());
        for (const Element& e : h.elements) {
            const bool is_vertex = &e == &*vertex_it;
            std::vector<double> values(e.properties.size());
            for (std::size_t i = 0; i < e.count; ++i) {
                for (std::size_t k = 0; k < e.properties.size(); ++k) {
                    const Property& p = e.properties[k];
                    if (p.is_list) {
                        std::size_t n = 0;
                        if (!(in >> n)) throw FormatError("truncated ASCII PLY body in element " + e.name);
                        double skip;
                        for (std::size_t j = 0; j < n; ++j) {
                            if (!(in >> skip)) throw FormatError("truncated ASCII PLY body in element " + e.name);
                        }
                    } else if (!(in >> values[k])) {
                        throw FormatError("truncated ASCII PLY body in element " + e.name);
                    }
                }
                if (is_vertex) store_vertex(f, i, layout, values);
            }
            if (is_vertex) break;
        }
    } else {
        ByteReader r(body);
        try {
            for (const Element& e : h.elements) {
                const bool is_vertex = &e == &*vertex_it;
                std::vector<double> values(e.properties.size());
                for (std::size_t i = 0; i < e.count; ++i) {
                    for (std::size_t k = 0; k < e.properties.size(); ++k) {
                        const Property& p = e.properties[k];
                        if (p.is_list) {
                            const auto n = static_cast<std::size_t>(read_binary_scalar(r, p.count_type));
                            for (std::size_t j = 0; j < n; ++j) read_binary_scalar(r, p.type);
                        } else {
                            values[k] = read_binary_scalar(r, p.type);
                        }
                    }
                    if (is_vertex) store_vertex(f, i, layout, values);
                }
                if (is_vertex) break;
            }
        } catch (const FormatError& err) {
            throw FormatError(std::string("binary PLY body: ") + err.what());
        }
    }
    f.bbox = bounds_of(f.positions);
    return f;
}

Bytes export_ply(const PointCloudFrame& frame, bool ascii)
{
    std::ostringstream head;
    head << "ply\nformat " << (ascii ? "ascii" : "binary_little_endian") << " 1.0\n"
         << "element vertex " << frame.size() << "\n"
         << "property float x\nproperty float y\nproperty float z\n"
         << "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
    const std::string header = head.str();
    Bytes out(header.begin(), header.end());
    if (ascii) {
        std::ostringstream body;
        body.imbue(std::locale::classic());
        body.precision(9);
        for (std::size_t i = 0; i < frame.size(); ++i) {
            const Vec3f& p = frame.positions[i];
            const Rgb8& c = frame.colors[i];
            body << p.x << ' ' << p.y << ' ' << p.z << ' ' << int(c.r) << ' ' << int(c.g) << ' ' << int(c.b) << '\n';
        }
        const std::string s = body.str();
        out.insert(out.end(), s.begin(), s.end());
    } else {
        ByteWriter w(out);
        for (std::size_t i = 0; i < frame.size(); ++i) {
            const Vec3f& p = frame.positions[i];
            w.f32(p.x);
            w.f32(p.y);
            w.f32(p.z);
            w.u8(frame.colors[i].r);
            w.u8(frame.colors[i].g);
            w.u8(frame.colors[i].b);
        }
    }
    return out;
}

}  // namespace twin
