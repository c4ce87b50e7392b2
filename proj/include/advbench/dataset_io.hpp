#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "advbench/batch.hpp"

namespace advbench {

/// Binary dataset layout, all little-endian:
///   8-byte magic "ADSET\x01\x00\x00", u32 n, u32 d, u32 C,
///   n*d float32 values (row-major, in [0,1]), n u32 labels.
void write_dataset(const ImageBatch& batch, const std::filesystem::path& path);
ImageBatch read_dataset(const std::filesystem::path& path);

/// In-memory forms of the same layout.
std::vector<unsigned char> encode_dataset(const ImageBatch& batch);
ImageBatch decode_dataset(std::span<const unsigned char> bytes);

namespace le {
void put_u32(std::vector<unsigned char>& out, std::uint32_t v);
void put_f32(std::vector<unsigned char>& out, float v);
std::uint32_t get_u32(const unsigned char* p);
float get_f32(const unsigned char* p);
}  // namespace le

std::vector<unsigned char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace advbench
