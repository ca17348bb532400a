#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pcqa {

struct PointCloud {
    std::vector<std::array<double, 3>> points;
    std::optional<std::vector<std::array<std::uint8_t, 3>>> colors;

    std::size_t size() const noexcept { return points.size(); }
    // Throws InvalidInput on a color/point count mismatch or a non-finite coordinate.
    void validate() const;

    friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

// ascii and binary_little_endian; x, y, z required, red/green/blue optional,
// other properties and elements skipped. Errors carry the byte offset.
PointCloud parse_ply(const std::string& path);
PointCloud parse_ply_buffer(std::string_view data);

// Writers for fixtures and tests.
std::string ply_ascii(const PointCloud& cloud);
std::string ply_binary_le(const PointCloud& cloud);

// Centroid to the origin, then uniform scale so max |coordinate| = 1.
PointCloud normalize(const PointCloud& cloud);

struct ViewConfig {
    std::size_t view_count = 6;
    std::size_t width = 512;
    std::size_t height = 512;
    std::size_t splat_radius = 1;
    std::uint8_t background = 255;

    void validate() const;
};

inline constexpr std::size_t kMaxViews = 26;

struct ViewDirection {
    std::array<double, 3> forward;  // from the object toward the camera
    std::array<double, 3> right;
    std::array<double, 3> up;
    std::string_view name;
};

// Presets in order: +X -X +Y -Y +Z -Z, then the 12 edge diagonals, then the 8 corners.
const std::array<ViewDirection, kMaxViews>& view_presets();

struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, top row first

    std::array<std::uint8_t, 3> pixel(std::size_t x, std::size_t y) const;
    friend bool operator==(const Image&, const Image&) = default;
};

// Orthographic projection along each preset direction with depth-buffered square
// splats; the nearest point wins, ties go to the lower point index. Colorless clouds
// are shaded gray by depth.
std::vector<Image> render_views(const PointCloud& cloud, const ViewConfig& config);
Image render_view(const PointCloud& cloud, const ViewConfig& config, std::size_t view);

// Binary PPM: "P6\n<w> <h>\n255\n" followed by raw RGB.
std::string encode_ppm(const Image& image);
Image decode_ppm(std::string_view data);
void write_image(const Image& image, const std::string& path);
Image read_image(const std::string& path);

}  // namespace pcqa
