#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace graphspy {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it into place, so readers never
// see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

// gzip members with a zero timestamp: identical input gives identical bytes.
std::string gzip_compress(std::string_view data);
std::string gzip_decompress(std::string_view data);

// Little-endian binary encoding used by the embedding and checkpoint files.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  void bytes(std::string_view s) { out_.append(s); }
  void str(std::string_view s);  // u32 length prefix
  const std::string& data() const { return out_; }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::string_view bytes(std::size_t n);
  std::string str();
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace graphspy
