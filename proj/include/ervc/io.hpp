#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ervc {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

/// Minimal RFC-4180 style reader: comma separated, optional double quotes.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string csv_escape(std::string_view field);

/// Shortest round-tripping decimal form of a double.
std::string format_real(double value);

// Little-endian primitives used by binary formats.
void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_u64le(std::vector<std::uint8_t>& out, std::uint64_t v);
std::uint16_t get_u16le(std::span<const std::uint8_t> bytes, std::size_t at);
std::uint32_t get_u32le(std::span<const std::uint8_t> bytes, std::size_t at);
std::uint64_t get_u64le(std::span<const std::uint8_t> bytes, std::size_t at);

}  // namespace ervc
