#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace mmfuse {

// Splits on runs of spaces/tabs; empty fields are dropped.
std::vector<std::string_view> split_whitespace(std::string_view line);

// Splits on a single delimiter character, keeping empty fields.
std::vector<std::string_view> split_on(std::string_view line, char delim);

std::string_view trim(std::string_view s);

// Parses a finite double; throws Error naming `what` and `line_no` on failure.
double parse_double(std::string_view field, std::size_t line_no,
                    std::string_view what);

std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

// Shortest text that reads back to exactly the same double.
std::string format_exact(double v);

// 64-bit FNV-1a over the file bytes, rendered as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace mmfuse
