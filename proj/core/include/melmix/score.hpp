#pragma once

#include <optional>
#include <string>
#include <vector>

#include "melmix/hangul.hpp"

namespace melmix {

inline constexpr int kRestPitch = -1;
inline constexpr int kDefaultSampleRate = 16000;
inline constexpr int kDefaultHop = 200;

// One monophonic note (or an explicit rest) on the score timeline.
struct NoteEvent {
  int pitch = kRestPitch;      // MIDI note number, or kRestPitch
  double start_s = 0.0;
  double end_s = 0.0;
  char32_t syllable = U'\0';   // one Hangul syllable; U'\0' marks a rest

  bool is_rest() const { return pitch == kRestPitch; }
  bool operator==(const NoteEvent&) const = default;
};

struct Score {
  std::vector<NoteEvent> notes;

  bool operator==(const Score&) const = default;
};

// Pitch/phoneme id tables. The pitch table holds 24 notes plus a silence
// token; the phoneme table holds the Jamo ids plus REST and PAD.
struct Vocab {
  int pitch_base = 55;  // lowest in-vocabulary MIDI note

  static constexpr int kPitchNoteCount = 24;
  static constexpr int kSilencePitchId = kPitchNoteCount;  // 24
  static constexpr int kPitchVocabSize = kPitchNoteCount + 1;

  int phoneme_vocab_size() const { return kPhonemeVocabSize; }
  int pitch_vocab_size() const { return kPitchVocabSize; }

  // Maps a MIDI note number to its id; throws RangeError outside
  // [pitch_base, pitch_base + 24).
  int pitch_id(int midi_note) const;
  int highest_note() const { return pitch_base + kPitchNoteCount - 1; }
};

// Spectrogram-aligned id sequences: one (pitch id, phoneme id) per frame.
// note_index maps each frame to the originating note (-1 for rest frames).
struct FrameAlignment {
  std::size_t frames = 0;
  std::vector<int> pitch_ids;
  std::vector<int> phoneme_ids;
  std::vector<int> note_index;
};

// Sorts, validates and returns the events of a score JSON document.
// Overlapping notes and non-Hangul syllables are format errors.
Score parse_score_json(const std::string& json_text);
std::string serialize_score_json(const Score& score);

// Nearest frame for a time point: round(t * sample_rate / hop).
std::int64_t time_to_frame(double t_seconds, int sample_rate = kDefaultSampleRate,
                           int hop = kDefaultHop);

// Expands a score to per-frame pitch/phoneme ids. Each note spanning n
// frames allots k_eff frames to the onset and (when present) coda, the rest
// to the nucleus, with k_eff = min(k, (n-1)/(coda ? 2 : 1)). Gaps become
// silence/REST frames. A note whose rounded span is empty steals one frame
// from the rest before it when one exists.
FrameAlignment align_to_frames(const Score& score, int k, const Vocab& vocab,
                               std::optional<std::size_t> total_frames = {},
                               int sample_rate = kDefaultSampleRate,
                               int hop = kDefaultHop);

// Validation shared by the parsers: events sorted by start, no overlap,
// positive duration, rest/syllable consistency.
void validate_score(const Score& score);

}  // namespace melmix
