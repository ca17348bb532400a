#include "pcqa/render.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "pcqa/errors.hpp"
#include "pcqa/io.hpp"

namespace pcqa {

namespace {

using Vec3 = std::array<double, 3>;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 normalized(Vec3 v) {
    const double n = std::sqrt(dot(v, v));
    return {v[0] / n, v[1] / n, v[2] / n};
}

ViewDirection make_view(Vec3 dir, std::string_view name) {
    const Vec3 f = normalized(dir);
    const Vec3 hint = (f[0] == 0.0 && f[1] == 0.0) ? Vec3{0.0, 1.0, 0.0} : Vec3{0.0, 0.0, 1.0};
    const Vec3 right = normalized(cross(hint, f));
    const Vec3 up = cross(f, right);
    return {f, right, up, name};
}

std::array<ViewDirection, kMaxViews> build_presets() {
    return {
        make_view({1, 0, 0}, "+x"),     make_view({-1, 0, 0}, "-x"),    make_view({0, 1, 0}, "+y"),
        make_view({0, -1, 0}, "-y"),    make_view({0, 0, 1}, "+z"),     make_view({0, 0, -1}, "-z"),
        make_view({1, 1, 0}, "+x+y"),   make_view({1, -1, 0}, "+x-y"),  make_view({-1, 1, 0}, "-x+y"),
        make_view({-1, -1, 0}, "-x-y"), make_view({1, 0, 1}, "+x+z"),   make_view({1, 0, -1}, "+x-z"),
        make_view({-1, 0, 1}, "-x+z"),  make_view({-1, 0, -1}, "-x-z"), make_view({0, 1, 1}, "+y+z"),
        make_view({0, 1, -1}, "+y-z"),  make_view({0, -1, 1}, "-y+z"),  make_view({0, -1, -1}, "-y-z"),
        make_view({1, 1, 1}, "+x+y+z"), make_view({1, 1, -1}, "+x+y-z"), make_view({1, -1, 1}, "+x-y+z"),
        make_view({1, -1, -1}, "+x-y-z"), make_view({-1, 1, 1}, "-x+y+z"), make_view({-1, 1, -1}, "-x+y-z"),
        make_view({-1, -1, 1}, "-x-y+z"), make_view({-1, -1, -1}, "-x-y-z"),
    };
}

// Largest image-plane coordinate any point of the [-1, 1]^3 cube can reach in this view.
double plane_extent(const ViewDirection& v) {
    double r = 0.0;
    for (int sx = -1; sx <= 1; sx += 2)
        for (int sy = -1; sy <= 1; sy += 2)
            for (int sz = -1; sz <= 1; sz += 2) {
                const Vec3 c{double(sx), double(sy), double(sz)};
                r = std::max({r, std::abs(dot(c, v.right)), std::abs(dot(c, v.up))});
            }
    return r;
}

long long round_half_up(double x) { return static_cast<long long>(std::floor(x + 0.5)); }

}  // namespace

void PointCloud::validate() const {
    if (colors && colors->size() != points.size())
        throw InvalidInput("point cloud: color count does not match point count");
    for (const auto& p : points)
        for (double c : p)
            if (!std::isfinite(c)) throw InvalidInput("point cloud: non-finite coordinate");
}

PointCloud normalize(const PointCloud& cloud) {
    cloud.validate();
    if (cloud.points.empty()) throw InvalidInput("normalize: empty point cloud");
    Vec3 centroid{0.0, 0.0, 0.0};
    for (const auto& p : cloud.points)
        for (int a = 0; a < 3; ++a) centroid[a] += p[a];
    const double n = static_cast<double>(cloud.points.size());
    for (auto& c : centroid) c /= n;

    PointCloud out = cloud;
    double max_abs = 0.0;
    for (auto& p : out.points)
        for (int a = 0; a < 3; ++a) {
            p[a] -= centroid[a];
            max_abs = std::max(max_abs, std::abs(p[a]));
        }
    if (max_abs > 0.0)
        for (auto& p : out.points)
            for (auto& c : p) c /= max_abs;
    return out;
}

void ViewConfig::validate() const {
    if (view_count < 1 || view_count > kMaxViews)
        throw InvalidInput("view_count must be in [1, 26], got " + std::to_string(view_count));
    if (width < 16 || height < 16) throw InvalidInput("resolution must be at least 16x16");
    if (2 * splat_radius + 2 >= std::min(width, height)) throw InvalidInput("splat radius too large for resolution");
}

const std::array<ViewDirection, kMaxViews>& view_presets() {
    static const auto presets = build_presets();
    return presets;
}

std::array<std::uint8_t, 3> Image::pixel(std::size_t x, std::size_t y) const {
    if (x >= width || y >= height) throw InvalidInput("pixel out of range");
    const std::size_t i = 3 * (y * width + x);
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

Image render_view(const PointCloud& cloud, const ViewConfig& config, std::size_t view) {
    config.validate();
    cloud.validate();
    if (cloud.points.empty()) throw InvalidInput("render: empty point cloud");
    if (view >= config.view_count) throw InvalidInput("render: view index out of range");

    const ViewDirection& v = view_presets()[view];
    const auto w = static_cast<long long>(config.width);
    const auto h = static_cast<long long>(config.height);
    const long long cx = w / 2;
    const long long cy = h / 2;
    const auto r = static_cast<long long>(config.splat_radius);
    const double scale = static_cast<double>(std::min(w, h) / 2 - r - 1) / plane_extent(v);
    const double depth_extent = std::sqrt(3.0);

    Image img;
    img.width = config.width;
    img.height = config.height;
    img.rgb.assign(3 * config.width * config.height, config.background);
    std::vector<double> depth(config.width * config.height, -std::numeric_limits<double>::infinity());

    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const auto& p = cloud.points[i];
        const double d = dot(p, v.forward);
        const long long px = cx + round_half_up(dot(p, v.right) * scale);
        const long long py = cy - round_half_up(dot(p, v.up) * scale);
        std::array<std::uint8_t, 3> color;
        if (cloud.colors) {
            color = (*cloud.colors)[i];
        } else {
            const double t = std::clamp((d + depth_extent) / (2.0 * depth_extent), 0.0, 1.0);
            const auto g = static_cast<std::uint8_t>(40 + round_half_up(175.0 * t));
            color = {g, g, g};
        }
        for (long long y = py - r; y <= py + r; ++y) {
            if (y < 0 || y >= h) continue;
            for (long long x = px - r; x <= px + r; ++x) {
                if (x < 0 || x >= w) continue;
                const auto idx = static_cast<std::size_t>(y * w + x);
                if (d > depth[idx]) {
                    depth[idx] = d;
                    std::copy(color.begin(), color.end(), img.rgb.begin() + static_cast<std::ptrdiff_t>(3 * idx));
                }
            }
        }
    }
    return img;
}

std::vector<Image> render_views(const PointCloud& cloud, const ViewConfig& config) {
    config.validate();
    std::vector<Image> out;
    out.reserve(config.view_count);
    for (std::size_t k = 0; k < config.view_count; ++k) out.push_back(render_view(cloud, config, k));
    return out;
}

std::string encode_ppm(const Image& image) {
    if (image.rgb.size() != 3 * image.width * image.height) throw InvalidInput("image buffer size mismatch");
    std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(image.rgb.data()), image.rgb.size());
    return out;
}

Image decode_ppm(std::string_view data) {
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < data.size()) {
            if (data[pos] == '#') {
                while (pos < data.size() && data[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_uint = [&](const char* what) {
        skip_space();
        std::size_t v = 0;
        const std::size_t start = pos;
        while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos])))
            v = v * 10 + static_cast<std::size_t>(data[pos++] - '0');
        if (pos == start) throw ParseError(std::string("ppm: expected ") + what, pos);
        return v;
    };
    if (data.substr(0, 2) != "P6") throw ParseError("ppm: missing P6 magic", 0);
    pos = 2;
    Image img;
    img.width = read_uint("width");
    img.height = read_uint("height");
    if (read_uint("maxval") != 255) throw ParseError("ppm: only maxval 255 is supported", pos);
    if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos])))
        throw ParseError("ppm: malformed header", pos);
    ++pos;
    const std::size_t n = 3 * img.width * img.height;
    if (data.size() - pos < n) throw ParseError("ppm: truncated pixel data", data.size());
    img.rgb.assign(reinterpret_cast<const std::uint8_t*>(data.data() + pos),
                   reinterpret_cast<const std::uint8_t*>(data.data() + pos + n));
    return img;
}

void write_image(const Image& image, const std::string& path) { io::write_file(path, encode_ppm(image)); }

Image read_image(const std::string& path) { return decode_ppm(io::read_file(path)); }

}  // namespace pcqa
