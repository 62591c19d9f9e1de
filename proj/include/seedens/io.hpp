#pragma once

#include <filesystem>
#include <string>

namespace seedens {

std::string read_text_file(const std::filesystem::path& path);

// Write-then-rename so readers never observe a partial file.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

// Inverse of format_double; throws InputError if `text` is not a full number.
double parse_double(std::string_view text, std::string_view context);

long parse_long(std::string_view text, std::string_view context);

}  // namespace seedens
