#pragma once

#include "melmix/matrix.hpp"
#include "melmix/wav.hpp"

namespace melmix {

// STFT / mel analysis parameters. Values other than the documented defaults
// are only used by tests.
struct FeatureConfig {
  int sample_rate = 16000;
  int n_fft = 1024;
  int win_length = 800;
  int hop = 200;
  int mel_bins = 120;
  float preemphasis = 0.97f;
  double fmin = 0.0;
  double fmax = 8000.0;
  float log_floor = 1e-5f;
};

// Mel spectrograms are frames x bins matrices of log magnitudes.
using MelSpectrogram = Matrix;

// HTK mel scale.
double mel_scale(double hz);
double mel_to_hz(double mel);

// Triangular filters on the rfft bin grid, mel_bins x (n_fft/2 + 1).
Matrix build_mel_filterbank(const FeatureConfig& cfg = {});

// Linear magnitude spectra, frames x (n_fft/2 + 1). Pre-emphasis, reflect
// padding of n_fft/2 samples on both sides, periodic Hann window of
// win_length zero-padded to n_fft. frames = 1 + floor(N / hop).
Matrix stft_magnitudes(const Waveform& w, const FeatureConfig& cfg = {});

// Log-mel spectrogram: filterbank applied to magnitudes, log with floor.
MelSpectrogram extract_mel(const Waveform& w, const FeatureConfig& cfg = {});

// Mel-cepstral distortion in dB: DCT-II cepstra per frame, coefficients
// 1..12 (c0 excluded), (10/ln10)*sqrt(2*sum(dc^2)), averaged over frames.
double mcd(const Matrix& a, const Matrix& b);

}  // namespace melmix
