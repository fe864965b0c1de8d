#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace promptseg {

// Reads the whole file; throws MissingFile when the path does not exist or
// cannot be opened.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

// Writes via a sibling temp file plus rename so readers never observe a
// partially written file. Creates parent directories as needed.
void write_file_atomic(const std::filesystem::path& path, const void* data, std::size_t size);
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

} // namespace promptseg
