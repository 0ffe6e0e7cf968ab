#include "melmix/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace melmix {

namespace {

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace

Waveform read_wav(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("wav: not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0, codec = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::uint32_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t len = get_u32(bytes.data() + pos + 4);
    pos += 8;
    if (pos + len > bytes.size()) throw FormatError("wav: truncated chunk");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw FormatError("wav: short fmt chunk");
      codec = get_u16(bytes.data() + pos);
      channels = get_u16(bytes.data() + pos + 2);
      rate = get_u32(bytes.data() + pos + 4);
      bits = get_u16(bytes.data() + pos + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + pos;
      data_len = len;
    }
    pos += len + (len & 1);  // chunks are word-aligned
  }
  if (!have_fmt || data == nullptr) throw FormatError("wav: missing fmt or data chunk");
  if (codec != 1) throw FormatError("wav: only PCM is supported");
  if (bits != 16) throw FormatError("wav: only 16-bit samples are supported");
  if (channels != 1) throw FormatError("wav: only mono input is supported");
  if (rate != 16000) throw FormatError("wav: expected a 16 kHz sample rate");

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  const std::size_t n = data_len / 2;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int16_t s =
        static_cast<std::int16_t>(data[2 * i] | data[2 * i + 1] << 8);
    w.samples[i] = static_cast<float>(s) / 32768.0f;
  }
  return w;
}

std::vector<std::uint8_t> encode_wav(const Waveform& w) {
  const std::uint32_t data_len = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate * 2));
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_len);
  for (float v : w.samples) {
    const float c = std::clamp(v, -1.0f, 0.999969f);
    const auto s = static_cast<std::int16_t>(std::lround(c * 32768.0f));
    out.push_back(static_cast<std::uint8_t>(s & 0xff));
    out.push_back(static_cast<std::uint8_t>((s >> 8) & 0xff));
  }
  return out;
}

}  // namespace melmix
