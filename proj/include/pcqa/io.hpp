#pragma once

#include <string>
#include <string_view>

namespace pcqa::io {

std::string read_file(const std::string& path);

// Writes through a temporary sibling and renames, so readers never see a half-written file.
void write_file(const std::string& path, std::string_view contents);

// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

}  // namespace pcqa::io
