#include "melmix/hangul.hpp"

namespace melmix {

PhonemeTriple decompose_hangul(char32_t syllable) {
  if (!is_hangul_syllable(syllable)) {
    throw InputError("decompose_hangul: code point outside U+AC00..U+D7A3");
  }
  const int s = static_cast<int>(syllable - kHangulFirst);
  const int initial = s / (kMedialCount * 28);
  const int medial = (s % (kMedialCount * 28)) / 28;
  const int final = s % 28;
  PhonemeTriple t;
  t.onset = initial;
  t.nucleus = kMedialIdBase + medial;
  if (final != 0) t.coda = kFinalIdBase + final - 1;
  return t;
}

char32_t single_codepoint(const std::string& utf8) {
  if (utf8.empty()) throw InputError("expected one code point, got empty string");
  const auto* p = reinterpret_cast<const unsigned char*>(utf8.data());
  char32_t cp = 0;
  std::size_t len = 0;
  if (p[0] < 0x80) {
    cp = p[0];
    len = 1;
  } else if ((p[0] & 0xe0) == 0xc0) {
    cp = p[0] & 0x1f;
    len = 2;
  } else if ((p[0] & 0xf0) == 0xe0) {
    cp = p[0] & 0x0f;
    len = 3;
  } else if ((p[0] & 0xf8) == 0xf0) {
    cp = p[0] & 0x07;
    len = 4;
  } else {
    throw InputError("invalid UTF-8 lead byte");
  }
  if (utf8.size() != len) {
    throw InputError("expected exactly one code point: " + utf8);
  }
  for (std::size_t i = 1; i < len; ++i) {
    if ((p[i] & 0xc0) != 0x80) throw InputError("invalid UTF-8 continuation");
    cp = (cp << 6) | (p[i] & 0x3f);
  }
  return cp;
}

std::string encode_utf8(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
  return out;
}

}  // namespace melmix
