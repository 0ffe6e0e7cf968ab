#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "melmix/score.hpp"

namespace melmix {

// Parses a Standard MIDI File (format 0 or 1) plus a lyric sidecar into a
// Score. Ticks are converted to seconds through the tempo map gathered from
// every track; the i-th syllable is attached to the i-th note in start
// order. Note-on with velocity 0 counts as note-off.
Score parse_smf(const std::vector<std::uint8_t>& bytes,
                const std::vector<std::string>& lyrics);

// Lyric sidecar: UTF-8 text, syllables separated by whitespace.
std::vector<std::string> parse_lyrics_text(const std::string& text);

}  // namespace melmix
