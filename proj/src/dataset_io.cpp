#include "advbench/dataset_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "advbench/errors.hpp"

namespace advbench {

namespace {

constexpr std::array<unsigned char, 8> kMagic{'A', 'D', 'S', 'E', 'T', 0x01, 0x00, 0x00};
constexpr std::size_t kHeaderBytes = 8 + 3 * 4;

}  // namespace

namespace le {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>((v >> (8 * b)) & 0xffu));
}

void put_f32(std::vector<unsigned char>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

}  // namespace le

std::vector<unsigned char> encode_dataset(const ImageBatch& batch) {
  batch.validate();
  std::vector<unsigned char> out(kMagic.begin(), kMagic.end());
  out.reserve(kHeaderBytes + 4 * (batch.data.size() + batch.rows));
  le::put_u32(out, static_cast<std::uint32_t>(batch.rows));
  le::put_u32(out, static_cast<std::uint32_t>(batch.dim));
  le::put_u32(out, static_cast<std::uint32_t>(batch.num_classes));
  for (double v : batch.data) le::put_f32(out, static_cast<float>(v));
  for (int y : batch.labels) le::put_u32(out, static_cast<std::uint32_t>(y));
  return out;
}

ImageBatch decode_dataset(std::span<const unsigned char> bytes) {
  if (bytes.size() < kHeaderBytes || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw LoadError("not a dataset file (bad magic)");
  }
  const std::uint64_t n = le::get_u32(bytes.data() + 8);
  const std::uint64_t d = le::get_u32(bytes.data() + 12);
  const std::uint64_t c = le::get_u32(bytes.data() + 16);
  if (bytes.size() != kHeaderBytes + 4 * (n * d + n)) {
    throw LoadError("dataset payload length does not match its header");
  }
  ImageBatch batch(n, d, c);
  const unsigned char* p = bytes.data() + kHeaderBytes;
  for (std::size_t k = 0; k < n * d; ++k, p += 4) batch.data[k] = le::get_f32(p);
  for (std::size_t k = 0; k < n; ++k, p += 4) {
    const std::uint32_t y = le::get_u32(p);
    if (y >= c) throw LoadError("dataset label out of range");
    batch.labels[k] = static_cast<int>(y);
  }
  try {
    batch.validate();
  } catch (const ConfigError& e) {
    throw LoadError(std::string("invalid dataset: ") + e.what());
  }
  return batch;
}

void write_dataset(const ImageBatch& batch, const std::filesystem::path& path) {
  write_file(path, encode_dataset(batch));
}

ImageBatch read_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path)); }

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, {reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

}  // namespace advbench
