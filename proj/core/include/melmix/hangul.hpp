#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "melmix/error.hpp"

namespace melmix {

// Phoneme ids for one syllable. Ids index the phoneme vocabulary:
// initials 0..18, medials 19..39, finals 40..66, then REST and PAD.
struct PhonemeTriple {
  int onset = 0;
  int nucleus = 0;
  std::optional<int> coda;

  bool operator==(const PhonemeTriple&) const = default;
};

inline constexpr char32_t kHangulFirst = U'가';
inline constexpr char32_t kHangulLast = U'힣';
inline constexpr int kInitialCount = 19;
inline constexpr int kMedialCount = 21;
inline constexpr int kFinalCount = 27;  // jongseong slots 1..27; 0 means none

inline constexpr int kMedialIdBase = kInitialCount;
inline constexpr int kFinalIdBase = kInitialCount + kMedialCount;
inline constexpr int kRestPhonemeId = kFinalIdBase + kFinalCount;   // 67
inline constexpr int kPadPhonemeId = kRestPhonemeId + 1;            // 68
inline constexpr int kPhonemeVocabSize = kPadPhonemeId + 1;         // 69

inline bool is_hangul_syllable(char32_t cp) {
  return cp >= kHangulFirst && cp <= kHangulLast;
}

// Unicode block arithmetic on U+AC00..U+D7A3. Throws InputError outside
// the syllable block.
PhonemeTriple decompose_hangul(char32_t syllable);

// Decodes a UTF-8 string that must contain exactly one code point.
char32_t single_codepoint(const std::string& utf8);
std::string encode_utf8(char32_t cp);

}  // namespace melmix
