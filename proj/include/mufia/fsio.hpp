#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mufia {

std::vector<std::uint8_t> read_file_bytes(const std::string& path);

// All writers below stage into "<path>.tmp" and rename on success, so a
// failed run never leaves a truncated primary output behind.
void write_file_bytes_atomic(const std::string& path, const void* data, std::size_t size);
void write_file_text_atomic(const std::string& path, const std::string& text);

void ensure_directory(const std::string& path);
bool file_exists(const std::string& path);

}  // namespace mufia
