#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <sstream>

#include "pcqa/errors.hpp"
#include "pcqa/io.hpp"
#include "pcqa/render.hpp"

namespace pcqa {

namespace {

enum class ScalarType { i8, u8, i16, u16, i32, u32, f32, f64 };

struct TypeInfo {
    std::string_view name;
    ScalarType type;
};

constexpr TypeInfo kTypes[] = {
    {"char", ScalarType::i8},     {"int8", ScalarType::i8},    {"uchar", ScalarType::u8},
    {"uint8", ScalarType::u8},    {"short", ScalarType::i16},  {"int16", ScalarType::i16},
    {"ushort", ScalarType::u16},  {"uint16", ScalarType::u16}, {"int", ScalarType::i32},
    {"int32", ScalarType::i32},   {"uint", ScalarType::u32},   {"uint32", ScalarType::u32},
    {"float", ScalarType::f32},   {"float32", ScalarType::f32}, {"double", ScalarType::f64},
    {"float64", ScalarType::f64},
};

std::size_t type_size(ScalarType t) {
    switch (t) {
        case ScalarType::i8:
        case ScalarType::u8: return 1;
        case ScalarType::i16:
        case ScalarType::u16: return 2;
        case ScalarType::i32:
        case ScalarType::u32:
        case ScalarType::f32: return 4;
        case ScalarType::f64: return 8;
    }
    return 0;
}

bool is_float(ScalarType t) { return t == ScalarType::f32 || t == ScalarType::f64; }

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

enum class Format { ascii, binary_le };

struct Header {
    Format format = Format::ascii;
    std::vector<Element> elements;
    std::size_t body_offset = 0;
};

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

ScalarType parse_type(std::string_view name, std::size_t offset) {
    for (const auto& t : kTypes)
        if (t.name == name) return t.type;
    throw ParseError("unknown property type '" + std::string(name) + "'", offset);
}

Header parse_header(std::string_view data) {
    Header h;
    std::size_t pos = 0;
    bool saw_format = false;
    bool first = true;
    while (true) {
        if (pos >= data.size()) throw ParseError("header ended without end_header", pos);
        const std::size_t eol = data.find('\n', pos);
        if (eol == std::string_view::npos) throw ParseError("header ended without end_header", data.size());
        const std::string_view line = data.substr(pos, eol - pos);
        const std::size_t line_offset = pos;
        pos = eol + 1;
        const auto tok = split_ws(line);
        if (first) {
            if (tok.size() != 1 || tok[0] != "ply") throw ParseError("missing 'ply' magic", line_offset);
            first = false;
            continue;
        }
        if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
        if (tok[0] == "format") {
            if (tok.size() < 3) throw ParseError("malformed format line", line_offset);
            if (tok[1] == "ascii") {
                h.format = Format::ascii;
            } else if (tok[1] == "binary_little_endian") {
                h.format = Format::binary_le;
            } else {
                throw ParseError("unsupported format '" + std::string(tok[1]) + "'", line_offset);
            }
            saw_format = true;
        } else if (tok[0] == "element") {
            if (tok.size() != 3) throw ParseError("malformed element line", line_offset);
            Element e;
            e.name = tok[1];
            const auto [p, ec] = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), e.count);
            if (ec != std::errc{} || p != tok[2].data() + tok[2].size())
                throw ParseError("malformed element count", line_offset);
            h.elements.push_back(std::move(e));
        } else if (tok[0] == "property") {
            if (h.elements.empty()) throw ParseError("property before any element", line_offset);
            Property prop;
            if (tok.size() == 5 && tok[1] == "list") {
                prop.is_list = true;
                prop.count_type = parse_type(tok[2], line_offset);
                if (is_float(prop.count_type)) throw ParseError("list count type must be integral", line_offset);
                prop.type = parse_type(tok[3], line_offset);
                prop.name = tok[4];
            } else if (tok.size() == 3) {
                prop.type = parse_type(tok[1], line_offset);
                prop.name = tok[2];
            } else {
                throw ParseError("malformed property line", line_offset);
            }
            h.elements.back().properties.push_back(std::move(prop));
        } else if (tok[0] == "end_header") {
            if (!saw_format) throw ParseError("header has no format line", line_offset);
            h.body_offset = pos;
            return h;
        } else {
            throw ParseError("unknown header keyword '" + std::string(tok[0]) + "'", line_offset);
        }
    }
}

struct VertexLayout {
    int x = -1, y = -1, z = -1, r = -1, g = -1, b = -1;
    bool has_color() const { return r >= 0 && g >= 0 && b >= 0; }
};

VertexLayout layout_of(const Element& e) {
    VertexLayout l;
    for (std::size_t i = 0; i < e.properties.size(); ++i) {
        const auto& p = e.properties[i];
        if (p.is_list) continue;
        const int idx = static_cast<int>(i);
        if (p.name == "x") l.x = idx;
        else if (p.name == "y") l.y = idx;
        else if (p.name == "z") l.z = idx;
        else if (p.name == "red") l.r = idx;
        else if (p.name == "green") l.g = idx;
        else if (p.name == "blue") l.b = idx;
    }
    return l;
}

std::uint8_t to_channel(double v, ScalarType t) {
    if (is_float(t)) v = std::round(v * 255.0);
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

class BinaryReader {
public:
    BinaryReader(std::string_view data, std::size_t pos) : data_(data), pos_(pos) {}

    double read(ScalarType t, const char* what) {
        const std::size_t n = type_size(t);
        if (pos_ + n > data_.size()) throw ParseError(std::string("truncated body while reading ") + what, pos_);
        unsigned char buf[8];
        std::memcpy(buf, data_.data() + pos_, n);
        if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + n);
        pos_ += n;
        switch (t) {
            case ScalarType::i8: { std::int8_t v; std::memcpy(&v, buf, 1); return v; }
            case ScalarType::u8: return buf[0];
            case ScalarType::i16: { std::int16_t v; std::memcpy(&v, buf, 2); return v; }
            case ScalarType::u16: { std::uint16_t v; std::memcpy(&v, buf, 2); return v; }
            case ScalarType::i32: { std::int32_t v; std::memcpy(&v, buf, 4); return v; }
            case ScalarType::u32: { std::uint32_t v; std::memcpy(&v, buf, 4); return v; }
            case ScalarType::f32: { float v; std::memcpy(&v, buf, 4); return v; }
            case ScalarType::f64: { double v; std::memcpy(&v, buf, 8); return v; }
        }
        return 0.0;
    }
    std::size_t pos() const { return pos_; }

private:
    std::string_view data_;
    std::size_t pos_;
};

class AsciiReader {
public:
    AsciiReader(std::string_view data, std::size_t pos) : data_(data), pos_(pos) {}

    double read(const char* what) {
        while (pos_ < data_.size() && std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
        if (pos_ >= data_.size()) throw ParseError(std::string("truncated body while reading ") + what, pos_);
        const char* begin = data_.data() + pos_;
        const char* end = data_.data() + data_.size();
        double v = 0.0;
        const auto [p, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc{}) throw ParseError(std::string("malformed number for ") + what, pos_);
        pos_ += static_cast<std::size_t>(p - begin);
        if (pos_ < data_.size() && !std::isspace(static_cast<unsigned char>(data_[pos_])))
            throw ParseError(std::string("malformed number for ") + what, pos_);
        return v;
    }

private:
    std::string_view data_;
    std::size_t pos_;
};

template <typename Reader, typename ReadScalar>
PointCloud read_body(const Header& h, Reader& reader, ReadScalar read_scalar) {
    PointCloud cloud;
    bool have_vertex = false;
    for (const auto& e : h.elements) {
        const bool is_vertex = e.name == "vertex" && !have_vertex;
        VertexLayout l;
        if (is_vertex) {
            have_vertex = true;
            l = layout_of(e);
            if (l.x < 0 || l.y < 0 || l.z < 0) throw ParseError("vertex element lacks x, y or z", h.body_offset);
            cloud.points.reserve(e.count);
            if (l.has_color()) cloud.colors.emplace().reserve(e.count);
        }
        std::vector<double> values(e.properties.size());
        for (std::size_t i = 0; i < e.count; ++i) {
            for (std::size_t p = 0; p < e.properties.size(); ++p) {
                const auto& prop = e.properties[p];
                if (prop.is_list) {
                    const double n = read_scalar(reader, prop.count_type, "list count");
                    if (n < 0) throw ParseError("negative list count", 0);
                    for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k)
                        read_scalar(reader, prop.type, "list item");
                } else {
                    values[p] = read_scalar(reader, prop.type, is_vertex ? "vertex" : "element");
                }
            }
            if (!is_vertex) continue;
            cloud.points.push_back({values[static_cast<std::size_t>(l.x)], values[static_cast<std::size_t>(l.y)],
                                    values[static_cast<std::size_t>(l.z)]});
            if (cloud.colors) {
                const auto& props = e.properties;
                cloud.colors->push_back(
                    {to_channel(values[static_cast<std::size_t>(l.r)], props[static_cast<std::size_t>(l.r)].type),
                     to_channel(values[static_cast<std::size_t>(l.g)], props[static_cast<std::size_t>(l.g)].type),
                     to_channel(values[static_cast<std::size_t>(l.b)], props[static_cast<std::size_t>(l.b)].type)});
            }
        }
    }
    if (!have_vertex) throw ParseError("no vertex element", h.body_offset);
    return cloud;
}

}  // namespace

PointCloud parse_ply_buffer(std::string_view data) {
    const Header h = parse_header(data);
    PointCloud cloud;
    try {
        if (h.format == Format::ascii) {
            AsciiReader reader(data, h.body_offset);
            cloud = read_body(h, reader, [](AsciiReader& r, ScalarType, const char* what) { return r.read(what); });
        } else {
            BinaryReader reader(data, h.body_offset);
            cloud = read_body(h, reader, [](BinaryReader& r, ScalarType t, const char* what) { return r.read(t, what); });
        }
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        if (msg.rfind("truncated", 0) == 0) {
            std::size_t expected = 0;
            for (const auto& el : h.elements)
                if (el.name == "vertex") expected = el.count;
            throw ParseError("truncated body: header declares " + std::to_string(expected) +
                                 " vertices; " + msg.substr(0, msg.find(" (at byte")),
                             e.byte_offset());
        }
        throw;
    }
    for (const auto& p : cloud.points)
        for (double c : p)
            if (!std::isfinite(c)) throw ParseError("non-finite coordinate", h.body_offset);
    return cloud;
}

PointCloud parse_ply(const std::string& path) {
    const std::string data = io::read_file(path);
    try {
        return parse_ply_buffer(data);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + std::string(e.what()).substr(0, std::string(e.what()).find(" (at byte")),
                         e.byte_offset());
    }
}

std::string ply_ascii(const PointCloud& cloud) {
    cloud.validate();
    std::ostringstream out;
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
        << "\nproperty double x\nproperty double y\nproperty double z\n";
    if (cloud.colors) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "end_header\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.points[i];
        out << io::format_double(p[0]) << ' ' << io::format_double(p[1]) << ' ' << io::format_double(p[2]);
        if (cloud.colors) {
            const auto& c = (*cloud.colors)[i];
            out << ' ' << int(c[0]) << ' ' << int(c[1]) << ' ' << int(c[2]);
        }
        out << '\n';
    }
    return out.str();
}

std::string ply_binary_le(const PointCloud& cloud) {
    cloud.validate();
    std::ostringstream head;
    head << "ply\nformat binary_little_endian 1.0\nelement vertex " << cloud.size()
         << "\nproperty double x\nproperty double y\nproperty double z\n";
    if (cloud.colors) head << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    head << "end_header\n";
    std::string out = head.str();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (double c : cloud.points[i]) {
            unsigned char buf[8];
            std::memcpy(buf, &c, 8);
            if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + 8);
            out.append(reinterpret_cast<const char*>(buf), 8);
        }
        if (cloud.colors)
            for (auto ch : (*cloud.colors)[i]) out.push_back(static_cast<char>(ch));
    }
    return out;
}

}  // namespace pcqa
