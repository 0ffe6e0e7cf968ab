#pragma once

#include <cstdint>
#include <vector>

#include "melmix/features.hpp"
#include "melmix/score.hpp"

namespace melmix {

// Deterministic score generator plus a closed-form score->mel oracle. The
// oracle places decaying Gaussian harmonics of the note's f0 on the mel
// axis for nucleus frames, overlays a fixed broadband template per
// onset/coda phoneme class, cross-fades 3 frames around note boundaries,
// and leaves rests at the log floor.
struct SynthConfig {
  int songs = 40;
  double seconds_per_song = 30.0;
  std::uint64_t seed = 1;
  int k = 3;
  Vocab vocab;
  double note_min_s = 0.2;
  double note_max_s = 0.6;
  double rest_prob = 0.15;
  double rest_min_s = 0.1;
  double rest_max_s = 0.4;
  int mel_bins = 120;
  float log_floor = 1e-5f;
  double fmax = 8000.0;
};

struct SongData {
  Score score;
  MelSpectrogram mel;
};

// Random monophonic score over the pitch vocabulary and a fixed syllable
// pool. Bitwise deterministic for a fixed config.
Score random_score(const SynthConfig& cfg, std::uint64_t song_index);

// The oracle mapping. Mel frame count equals the score's alignment length.
MelSpectrogram oracle_mel(const Score& score, const SynthConfig& cfg);

std::vector<SongData> synth_dataset(const SynthConfig& cfg);

}  // namespace melmix
