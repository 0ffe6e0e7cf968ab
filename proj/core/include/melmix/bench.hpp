#pragma once

#include <string>
#include <vector>

#include "melmix/inference.hpp"

namespace melmix {

enum class BenchMode { kBatched, kSequential, kBatchedOverlapped };

std::string bench_mode_name(BenchMode mode);

struct BenchConfig {
  std::vector<std::int64_t> frame_counts;
  int repeats = 20;
  int warmup = 2;
  int overlap = 30;  // w for the overlapped mode
  int threads = 1;
  std::uint64_t seed = 1;
};

struct BenchResult {
  BenchMode mode = BenchMode::kBatched;
  std::int64_t frames = 0;
  int repeats = 0;
  int threads = 1;
  std::vector<double> latencies_s;  // one per repeat
  double median_s = 0.0;
  double p10_s = 0.0;
  double p90_s = 0.0;
  double rtf = 0.0;  // audio seconds / median wall seconds
};

// Audio duration for a frame count at the analysis hop/sample rate.
double audio_seconds(std::int64_t frames, int hop = kDefaultHop,
                     int sample_rate = kDefaultSampleRate);

// Times full synthesis (planning, input assembly, forward, stitching) for
// each requested frame count in each mode; file I/O is excluded. The timed
// outputs are the same mels the untimed paths produce.
std::vector<BenchResult> measure(const ModelParams& params,
                                 const BenchConfig& cfg,
                                 const std::vector<BenchMode>& modes);

// CSV "mode,frames,median_s,p10_s,p90_s,rtf", sorted by (mode, frames).
void report(const std::vector<BenchResult>& results, const std::string& path);
std::string report_csv(const std::vector<BenchResult>& results);

}  // namespace melmix
