#include "melmix/score.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace melmix {

int Vocab::pitch_id(int midi_note) const {
  if (midi_note == kRestPitch) return kSilencePitchId;
  if (midi_note < pitch_base || midi_note >= pitch_base + kPitchNoteCount) {
    throw RangeError("pitch " + std::to_string(midi_note) +
                     " outside vocabulary [" + std::to_string(pitch_base) + ", " +
                     std::to_string(highest_note()) + "]");
  }
  return midi_note - pitch_base;
}

void validate_score(const Score& score) {
  for (std::size_t i = 0; i < score.notes.size(); ++i) {
    const NoteEvent& n = score.notes[i];
    if (!(n.end_s > n.start_s)) {
      throw FormatError("score: note " + std::to_string(i) +
                        " has non-positive duration");
    }
    if (n.is_rest()) {
      if (n.syllable != U'\0') {
        throw FormatError("score: rest event carries a syllable");
      }
    } else {
      if (n.pitch < 0 || n.pitch > 127) {
        throw FormatError("score: pitch out of MIDI range");
      }
      if (!is_hangul_syllable(n.syllable)) {
        throw FormatError("score: syllable is not a Hangul syllable");
      }
    }
    if (i > 0 && score.notes[i - 1].end_s > n.start_s + 1e-9) {
      throw FormatError("score: overlapping notes (monophonic input required)");
    }
  }
}

Score parse_score_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("score json: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("notes") || !doc["notes"].is_array()) {
    throw FormatError("score json: expected object with a \"notes\" array");
  }
  Score score;
  for (const auto& item : doc["notes"]) {
    if (!item.is_object()) throw FormatError("score json: note must be an object");
    NoteEvent n;
    try {
      n.pitch = item.at("pitch").get<int>();
      n.start_s = item.at("start_s").get<double>();
      n.end_s = item.at("end_s").get<double>();
      const std::string syl = item.at("syllable").get<std::string>();
      if (syl == "R") {
        n.syllable = U'\0';
        if (n.pitch != kRestPitch) {
          throw FormatError("score json: rest must use pitch -1");
        }
      } else {
        n.syllable = single_codepoint(syl);
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("score json: ") + e.what());
    } catch (const InputError& e) {
      throw FormatError(std::string("score json: ") + e.what());
    }
    score.notes.push_back(n);
  }
  std::stable_sort(score.notes.begin(), score.notes.end(),
                   [](const NoteEvent& a, const NoteEvent& b) {
                     return a.start_s < b.start_s;
                   });
  validate_score(score);
  return score;
}

std::string serialize_score_json(const Score& score) {
  nlohmann::json notes = nlohmann::json::array();
  for (const NoteEvent& n : score.notes) {
    notes.push_back({{"pitch", n.pitch},
                     {"start_s", n.start_s},
                     {"end_s", n.end_s},
                     {"syllable", n.is_rest() ? "R" : encode_utf8(n.syllable)}});
  }
  nlohmann::json doc;
  doc["notes"] = notes;
  return doc.dump(2) + "\n";
}

std::int64_t time_to_frame(double t_seconds, int sample_rate, int hop) {
  return std::llround(t_seconds * sample_rate / hop);
}

FrameAlignment align_to_frames(const Score& score, int k, const Vocab& vocab,
                               std::optional<std::size_t> total_frames,
                               int sample_rate, int hop) {
  if (k < 0) throw ParameterError("align_to_frames: k must be >= 0");
  validate_score(score);

  std::int64_t end_frame = 0;
  for (const NoteEvent& n : score.notes) {
    end_frame = std::max(end_frame, time_to_frame(n.end_s, sample_rate, hop));
  }
  std::size_t frames = static_cast<std::size_t>(end_frame);
  if (total_frames) {
    if (*total_frames < frames) {
      throw RangeError("align_to_frames: total_frames ends before the last note");
    }
    frames = *total_frames;
  }

  FrameAlignment out;
  out.frames = frames;
  out.pitch_ids.assign(frames, Vocab::kSilencePitchId);
  out.phoneme_ids.assign(frames, kRestPhonemeId);
  out.note_index.assign(frames, -1);

  std::int64_t prev_assigned_end = 0;
  for (std::size_t note_i = 0; note_i < score.notes.size(); ++note_i) {
    const NoteEvent& n = score.notes[note_i];
    if (n.is_rest()) continue;
    std::int64_t s = time_to_frame(n.start_s, sample_rate, hop);
    std::int64_t e = time_to_frame(n.end_s, sample_rate, hop);
    if (e == s) {
      // Rounded to nothing: take one frame from the rest before the note.
      if (s > prev_assigned_end) {
        s -= 1;
      } else {
        throw AlignmentError("align_to_frames: note rounds to zero frames and no "
                             "rest precedes it");
      }
    }
    const PhonemeTriple triple = decompose_hangul(n.syllable);
    const int pitch_id = vocab.pitch_id(n.pitch);
    const std::int64_t n_frames = e - s;
    const int denom = triple.coda ? 2 : 1;
    const std::int64_t k_eff =
        std::min<std::int64_t>(k, (n_frames - 1) / denom);
    const std::int64_t onset_frames = k_eff;
    const std::int64_t coda_frames = triple.coda ? k_eff : 0;
    const std::int64_t nucleus_frames = n_frames - onset_frames - coda_frames;

    for (std::int64_t f = s; f < e; ++f) {
      out.pitch_ids[static_cast<std::size_t>(f)] = pitch_id;
      out.note_index[static_cast<std::size_t>(f)] = static_cast<int>(note_i);
      const std::int64_t off = f - s;
      int phoneme;
      if (off < onset_frames) {
        phoneme = triple.onset;
      } else if (off < onset_frames + nucleus_frames) {
        phoneme = triple.nucleus;
      } else {
        phoneme = *triple.coda;
      }
      out.phoneme_ids[static_cast<std::size_t>(f)] = phoneme;
    }
    prev_assigned_end = e;
  }
  return out;
}

}  // namespace melmix
