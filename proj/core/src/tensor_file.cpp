#include "melmix/tensor_file.hpp"

#include <cstring>
#include <fstream>
#include <limits>

#include "melmix/error.hpp"

namespace melmix {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, const float* data, std::size_t n) {
  const std::size_t off = out.size();
  out.resize(off + n * 4);
  std::memcpy(out.data() + off, data, n * 4);  // little-endian host assumed
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint16_t u16() {
    need(2);
    const std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_]) |
                            static_cast<std::uint16_t>(bytes_[pos_ + 1]) << 8;
    pos_ += 2;
    return v;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  void f32(float* out, std::size_t n) {
    need(n * 4);
    std::memcpy(out, bytes_.data() + pos_, n * 4);
    pos_ += n * 4;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw FormatError("tensor file: truncated data");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_tensors(const std::vector<NamedTensor>& tensors) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'T', 'E', 'N', '1'});
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    if (t.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw FormatError("tensor file: name too long");
    }
    put_u16(out, static_cast<std::uint16_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put_u32(out, static_cast<std::uint32_t>(t.value.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.value.cols()));
    put_f32(out, t.value.data(), t.value.size());
  }
  return out;
}

std::vector<NamedTensor> decode_tensors(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.str(4) != "TEN1") throw FormatError("tensor file: bad magic");
  const std::uint32_t count = r.u32();
  std::vector<NamedTensor> tensors;
  tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const std::uint16_t name_len = r.u16();
    t.name = r.str(name_len);
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    t.value = Matrix(rows, cols);
    r.f32(t.value.data(), t.value.size());
    tensors.push_back(std::move(t));
  }
  if (!r.at_end()) throw FormatError("tensor file: trailing bytes");
  return tensors;
}

void write_tensor_file(const std::string& path,
                       const std::vector<NamedTensor>& tensors) {
  write_file_bytes(path, encode_tensors(tensors));
}

std::vector<NamedTensor> read_tensor_file(const std::string& path) {
  return decode_tensors(read_file_bytes(path));
}

void write_mel_file(const std::string& path, const Matrix& mel) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'M', 'E', 'L', '1'});
  put_u32(out, static_cast<std::uint32_t>(mel.rows()));
  put_u32(out, static_cast<std::uint32_t>(mel.cols()));
  put_f32(out, mel.data(), mel.size());
  write_file_bytes(path, out);
}

Matrix read_mel_file(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  Reader r(bytes);
  if (r.str(4) != "MEL1") throw FormatError("mel file: bad magic");
  const std::uint32_t frames = r.u32();
  const std::uint32_t bins = r.u32();
  Matrix mel(frames, bins);
  r.f32(mel.data(), mel.size());
  if (!r.at_end()) throw FormatError("mel file: trailing bytes");
  return mel;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw IoError("read failed: " + path);
  return bytes;
}

void write_file_bytes(const std::string& path,
                      const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  if (!bytes.empty()) {
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_file_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

std::string read_file_text(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace melmix
