#include "melmix/features.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "melmix/error.hpp"

namespace melmix {

namespace {

constexpr double kPi = std::numbers::pi;

// Iterative radix-2 FFT in double precision. n must be a power of two.
class Fft {
 public:
  explicit Fft(std::size_t n) : n_(n) {
    if (n == 0 || (n & (n - 1)) != 0) {
      throw ParameterError("fft: size must be a power of two");
    }
    rev_.resize(n);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1) << (bits - 1 - b);
      rev_[i] = r;
    }
    cos_.resize(n / 2);
    sin_.resize(n / 2);
    for (std::size_t i = 0; i < n / 2; ++i) {
      cos_[i] = std::cos(-2.0 * kPi * i / n);
      sin_[i] = std::sin(-2.0 * kPi * i / n);
    }
  }

  // In-place FFT over interleaved (re, im) pairs.
  void run(std::vector<double>& re, std::vector<double>& im) const {
    for (std::size_t i = 0; i < n_; ++i) {
      if (rev_[i] > i) {
        std::swap(re[i], re[rev_[i]]);
        std::swap(im[i], im[rev_[i]]);
      }
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len >> 1;
      const std::size_t step = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t k = 0; k < half; ++k) {
          const double wr = cos_[k * step];
          const double wi = sin_[k * step];
          const std::size_t a = start + k;
          const std::size_t b = a + half;
          const double tr = re[b] * wr - im[b] * wi;
          const double ti = re[b] * wi + im[b] * wr;
          re[b] = re[a] - tr;
          im[b] = im[a] - ti;
          re[a] += tr;
          im[a] += ti;
        }
      }
    }
  }

 private:
  std::size_t n_;
  std::vector<std::size_t> rev_;
  std::vector<double> cos_, sin_;
};

// np.pad-style reflection (edge value not repeated).
std::size_t reflect_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  std::int64_t j = ((i % period) + period) % period;
  if (j >= n) j = period - j;
  return static_cast<std::size_t>(j);
}

}  // namespace

double mel_scale(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Matrix build_mel_filterbank(const FeatureConfig& cfg) {
  const int n_bins = cfg.n_fft / 2 + 1;
  const double mel_lo = mel_scale(cfg.fmin);
  const double mel_hi = mel_scale(cfg.fmax);
  std::vector<double> corners(cfg.mel_bins + 2);
  for (int i = 0; i < cfg.mel_bins + 2; ++i) {
    corners[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.mel_bins + 1));
  }
  Matrix fb(cfg.mel_bins, n_bins);
  for (int m = 0; m < cfg.mel_bins; ++m) {
    const double lo = corners[m], mid = corners[m + 1], hi = corners[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / cfg.n_fft;
      const double up = (f - lo) / (mid - lo);
      const double down = (hi - f) / (hi - mid);
      const double w = std::max(0.0, std::min(up, down));
      fb(m, k) = static_cast<float>(w);
    }
  }
  return fb;
}

Matrix stft_magnitudes(const Waveform& w, const FeatureConfig& cfg) {
  const std::int64_t n = static_cast<std::int64_t>(w.samples.size());
  if (n < 1) throw DegenerateInputError("stft: empty signal");

  // Pre-emphasis, then centered framing over a reflect-padded signal.
  std::vector<float> emph(w.samples.size());
  emph[0] = w.samples[0];
  for (std::size_t i = 1; i < w.samples.size(); ++i) {
    emph[i] = w.samples[i] - cfg.preemphasis * w.samples[i - 1];
  }

  const std::int64_t pad = cfg.n_fft / 2;
  std::vector<double> padded(static_cast<std::size_t>(n + 2 * pad));
  for (std::int64_t i = 0; i < n + 2 * pad; ++i) {
    padded[static_cast<std::size_t>(i)] = emph[reflect_index(i - pad, n)];
  }

  // Periodic Hann of win_length, centered in the n_fft buffer.
  std::vector<double> window(cfg.n_fft, 0.0);
  const int off = (cfg.n_fft - cfg.win_length) / 2;
  for (int i = 0; i < cfg.win_length; ++i) {
    window[off + i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / cfg.win_length);
  }

  const std::size_t frames = 1 + static_cast<std::size_t>(n / cfg.hop);
  const int n_bins = cfg.n_fft / 2 + 1;
  Matrix mag(frames, n_bins);

  Fft fft(static_cast<std::size_t>(cfg.n_fft));
  std::vector<double> re(cfg.n_fft), im(cfg.n_fft);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * cfg.hop;
    for (int i = 0; i < cfg.n_fft; ++i) {
      re[i] = padded[start + i] * window[i];
      im[i] = 0.0;
    }
    fft.run(re, im);
    float* out = mag.data() + t * n_bins;
    for (int k = 0; k < n_bins; ++k) {
      out[k] = static_cast<float>(std::sqrt(re[k] * re[k] + im[k] * im[k]));
    }
  }
  return mag;
}

MelSpectrogram extract_mel(const Waveform& w, const FeatureConfig& cfg) {
  const Matrix mag = stft_magnitudes(w, cfg);
  const Matrix fb_t = transpose(build_mel_filterbank(cfg));
  Matrix mel = matmul(mag, fb_t);
  float* d = mel.data();
  for (std::size_t i = 0; i < mel.size(); ++i) {
    d[i] = std::log(std::max(d[i], cfg.log_floor));
  }
  return mel;
}

double mcd(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw DimensionError("mcd: shape mismatch");
  const std::size_t frames = a.rows();
  const std::size_t bins = a.cols();
  if (frames == 0) return 0.0;
  constexpr int kCoeffs = 12;  // c1..c12
  // DCT-II basis rows for i = 1..12.
  std::vector<double> basis(kCoeffs * bins);
  for (int i = 1; i <= kCoeffs; ++i) {
    for (std::size_t j = 0; j < bins; ++j) {
      basis[(i - 1) * bins + j] = std::cos(kPi * i * (j + 0.5) / bins);
    }
  }
  const double scale = 10.0 / std::log(10.0);
  double total = 0.0;
  for (std::size_t t = 0; t < frames; ++t) {
    const float* ra = a.data() + t * bins;
    const float* rb = b.data() + t * bins;
    double sq = 0.0;
    for (int i = 0; i < kCoeffs; ++i) {
      const double* bas = basis.data() + i * bins;
      double dc = 0.0;
      for (std::size_t j = 0; j < bins; ++j) {
        dc += (double(ra[j]) - double(rb[j])) * bas[j];
      }
      sq += dc * dc;
    }
    total += scale * std::sqrt(2.0 * sq);
  }
  return total / static_cast<double>(frames);
}

}  // namespace melmix
