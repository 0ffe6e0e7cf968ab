#pragma once

#include <string>
#include <utility>
#include <vector>

#include "melmix/matrix.hpp"

namespace melmix {

// "TEN1" container: magic bytes, little-endian u32 tensor count, then per
// tensor a u16 name length, UTF-8 name, u32 rows, u32 cols and rows*cols
// little-endian float32 values.
struct NamedTensor {
  std::string name;
  Matrix value;
};

std::vector<std::uint8_t> encode_tensors(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_tensors(const std::vector<std::uint8_t>& bytes);

void write_tensor_file(const std::string& path,
                       const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_tensor_file(const std::string& path);

// "MEL1" container: magic bytes, u32 frames, u32 bins, row-major float32.
void write_mel_file(const std::string& path, const Matrix& mel);
Matrix read_mel_file(const std::string& path);

// Whole-file helpers.
std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path,
                      const std::vector<std::uint8_t>& bytes);
void write_file_text(const std::string& path, const std::string& text);
std::string read_file_text(const std::string& path);

}  // namespace melmix
