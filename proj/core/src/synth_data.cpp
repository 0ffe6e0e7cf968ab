#include "melmix/synth_data.hpp"

#include <array>
#include <cmath>

#include "melmix/rng.hpp"

namespace melmix {

namespace {

// Mixed pool: open syllables and syllables with codas.
constexpr std::array<char32_t, 24> kSyllablePool = {
    U'가', U'나', U'다', U'라', U'마', U'바', U'사', U'아',
    U'자', U'차', U'카', U'하', U'도', U'레', U'미', U'소',
    U'강', U'난', U'달', U'람', U'말', U'산', U'잔', U'한'};

constexpr int kHarmonics = 6;
constexpr double kHarmonicDecay = 0.75;
constexpr double kBumpSigmaMel = 28.0;
constexpr double kConsonantLevel = 0.35;

double midi_to_hz(int midi_note) {
  return 440.0 * std::pow(2.0, (midi_note - 69) / 12.0);
}

// Center of mel bin b when the axis is split into bins+1 equal mel steps.
double mel_bin_center(int b, int bins, double fmax) {
  return mel_scale(fmax) * (b + 1) / (bins + 1);
}

// Fixed pseudo-noise spectrum per consonant class, piecewise over 4-bin
// groups so it reads as broadband rather than tonal.
double consonant_weight(int phoneme_id, int bin) {
  const RngStream tmpl{0x636f6e73ull, static_cast<std::uint64_t>(phoneme_id)};
  return 0.5 + 0.5 * tmpl.uniform(static_cast<std::uint64_t>(bin / 4));
}

}  // namespace

Score random_score(const SynthConfig& cfg, std::uint64_t song_index) {
  const RngStream rng = RngStream{cfg.seed, 0x736f6e67ull}.fork(song_index);
  Score score;
  double t = 0.0;
  std::uint64_t draw = 0;
  while (t < cfg.seconds_per_song) {
    const bool rest = rng.uniform(draw++) < cfg.rest_prob && !score.notes.empty();
    if (rest) {
      t += rng.uniform(draw++, static_cast<float>(cfg.rest_min_s),
                       static_cast<float>(cfg.rest_max_s));
      continue;
    }
    NoteEvent n;
    const double dur = rng.uniform(draw++, static_cast<float>(cfg.note_min_s),
                                   static_cast<float>(cfg.note_max_s));
    n.pitch = cfg.vocab.pitch_base +
              static_cast<int>(rng.bits(draw++) % Vocab::kPitchNoteCount);
    n.syllable = kSyllablePool[rng.bits(draw++) % kSyllablePool.size()];
    n.start_s = t;
    n.end_s = t + dur;
    score.notes.push_back(n);
    t = n.end_s;
  }
  return score;
}

MelSpectrogram oracle_mel(const Score& score, const SynthConfig& cfg) {
  const FrameAlignment align = align_to_frames(score, cfg.k, cfg.vocab);
  const std::size_t F = align.frames;
  const int B = cfg.mel_bins;
  const double mel_max = mel_scale(cfg.fmax);

  // Steady-state linear spectra per frame.
  Matrix steady(F, B);
  for (std::size_t f = 0; f < F; ++f) {
    if (align.note_index[f] < 0) continue;  // rest: stays zero
    const NoteEvent& note = score.notes[static_cast<std::size_t>(align.note_index[f])];
    float* row = steady.data() + f * B;
    const double f0 = midi_to_hz(note.pitch);
    for (int h = 1; h <= kHarmonics; ++h) {
      const double hz = f0 * h;
      if (hz >= cfg.fmax) break;
      const double center = mel_scale(hz);
      if (center > mel_max + 4.0 * kBumpSigmaMel) break;
      const double amp = std::pow(kHarmonicDecay, h - 1);
      for (int b = 0; b < B; ++b) {
        const double d = mel_bin_center(b, B, cfg.fmax) - center;
        row[b] += static_cast<float>(
            amp * std::exp(-d * d / (2.0 * kBumpSigmaMel * kBumpSigmaMel)));
      }
    }
    const int ph = align.phoneme_ids[f];
    const bool is_onset = ph < kMedialIdBase;
    const bool is_coda = ph >= kFinalIdBase && ph < kRestPhonemeId;
    if (is_onset || is_coda) {
      for (int b = 0; b < B; ++b) {
        row[b] += static_cast<float>(kConsonantLevel * consonant_weight(ph, b));
      }
    }
  }

  // 3-frame linear cross-fade wherever the note identity changes.
  Matrix blended = steady;
  for (std::size_t f = 1; f < F; ++f) {
    if (align.note_index[f] == align.note_index[f - 1]) continue;
    const float* prev_ref = steady.data() + (f - 1) * B;
    const float* next_ref = steady.data() + f * B;
    struct Mix {
      std::int64_t frame;
      float next_weight;
    };
    const std::int64_t fb = static_cast<std::int64_t>(f);
    const Mix mixes[3] = {{fb - 1, 0.25f}, {fb, 0.5f}, {fb + 1, 0.75f}};
    for (const Mix& m : mixes) {
      if (m.frame < 0 || m.frame >= static_cast<std::int64_t>(F)) continue;
      float* out = blended.data() + static_cast<std::size_t>(m.frame) * B;
      const float* own =
          m.next_weight > 0.5f ? steady.data() + static_cast<std::size_t>(m.frame) * B
                               : prev_ref;
      const float* other = m.next_weight > 0.5f ? prev_ref : next_ref;
      const float w_other = m.next_weight > 0.5f ? 1.0f - m.next_weight : m.next_weight;
      for (int b = 0; b < B; ++b) {
        out[b] = (1.0f - w_other) * own[b] + w_other * other[b];
      }
    }
  }

  MelSpectrogram mel(F, B);
  for (std::size_t i = 0; i < mel.size(); ++i) {
    mel.data()[i] = std::log(std::max(blended.data()[i], cfg.log_floor));
  }
  return mel;
}

std::vector<SongData> synth_dataset(const SynthConfig& cfg) {
  std::vector<SongData> out;
  out.reserve(static_cast<std::size_t>(cfg.songs));
  for (int i = 0; i < cfg.songs; ++i) {
    SongData song;
    song.score = random_score(cfg, static_cast<std::uint64_t>(i));
    song.mel = oracle_mel(song.score, cfg);
    out.push_back(std::move(song));
  }
  return out;
}

}  // namespace melmix
