#include "melmix/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "melmix/synth_data.hpp"
#include "melmix/tensor_file.hpp"

namespace melmix {

namespace {

using Clock = std::chrono::steady_clock;

double percentile(std::vector<double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * (sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - lo;
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

// Deterministic benchmark input covering the full pitch/phoneme space.
FrameAlignment bench_alignment(std::int64_t frames, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.seconds_per_song = audio_seconds(frames) + 1.0;
  Score score = random_score(cfg, 0);
  // Trim notes that round past the requested horizon.
  while (!score.notes.empty() &&
         time_to_frame(score.notes.back().end_s) > frames) {
    score.notes.pop_back();
  }
  return align_to_frames(score, cfg.k, cfg.vocab,
                         static_cast<std::size_t>(frames));
}

}  // namespace

std::string bench_mode_name(BenchMode mode) {
  switch (mode) {
    case BenchMode::kBatched:
      return "batched";
    case BenchMode::kSequential:
      return "sequential";
    case BenchMode::kBatchedOverlapped:
      return "batched_overlapped";
  }
  return "unknown";
}

double audio_seconds(std::int64_t frames, int hop, int sample_rate) {
  return static_cast<double>(frames) * hop / sample_rate;
}

std::vector<BenchResult> measure(const ModelParams& params,
                                 const BenchConfig& cfg,
                                 const std::vector<BenchMode>& modes) {
  if (cfg.repeats < 1) throw ParameterError("bench: repeats must be >= 1");
  for (const std::int64_t f : cfg.frame_counts) {
    if (f < 1) throw ParameterError("bench: frame counts must be >= 1");
  }
  ThreadPool pool(static_cast<std::size_t>(std::max(1, cfg.threads)));

  std::vector<BenchResult> results;
  for (const BenchMode mode : modes) {
    for (const std::int64_t frames : cfg.frame_counts) {
      const FrameAlignment alignment = bench_alignment(frames, cfg.seed);
      const auto run_once = [&]() {
        // Planning is part of the measured work.
        if (mode == BenchMode::kBatchedOverlapped) {
          const SegmentationPlan plan =
              plan_overlapped(frames, params.config.seq_len, cfg.overlap);
          return synthesize(alignment, params, plan, &pool);
        }
        const SegmentationPlan plan = plan_naive(frames, params.config.seq_len);
        if (mode == BenchMode::kSequential) {
          return synthesize_sequential(alignment, params, plan);
        }
        return synthesize(alignment, params, plan, &pool);
      };

      BenchResult res;
      res.mode = mode;
      res.frames = frames;
      res.repeats = cfg.repeats;
      res.threads = cfg.threads;
      for (int i = 0; i < cfg.warmup; ++i) run_once();
      res.latencies_s.reserve(static_cast<std::size_t>(cfg.repeats));
      for (int i = 0; i < cfg.repeats; ++i) {
        const auto t0 = Clock::now();
        const SynthesisResult out = run_once();
        const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
        if (out.mel.rows() != static_cast<std::size_t>(frames)) {
          throw NumericError("bench: synthesis returned the wrong frame count");
        }
        res.latencies_s.push_back(dt);
      }
      std::vector<double> sorted = res.latencies_s;
      std::sort(sorted.begin(), sorted.end());
      res.median_s = percentile(sorted, 0.5);
      res.p10_s = percentile(sorted, 0.1);
      res.p90_s = percentile(sorted, 0.9);
      res.rtf = audio_seconds(frames) / res.median_s;
      results.push_back(std::move(res));
    }
  }
  return results;
}

std::string report_csv(const std::vector<BenchResult>& results) {
  if (results.empty()) throw DegenerateInputError("bench report: no results");
  std::vector<const BenchResult*> order;
  order.reserve(results.size());
  for (const auto& r : results) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(),
                   [](const BenchResult* a, const BenchResult* b) {
                     const std::string an = bench_mode_name(a->mode);
                     const std::string bn = bench_mode_name(b->mode);
                     return an != bn ? an < bn : a->frames < b->frames;
                   });
  std::string csv = "mode,frames,median_s,p10_s,p90_s,rtf\n";
  char line[200];
  for (const BenchResult* r : order) {
    std::snprintf(line, sizeof(line), "%s,%lld,%.9g,%.9g,%.9g,%.9g\n",
                  bench_mode_name(r->mode).c_str(),
                  static_cast<long long>(r->frames), r->median_s, r->p10_s,
                  r->p90_s, r->rtf);
    csv += line;
  }
  return csv;
}

void report(const std::vector<BenchResult>& results, const std::string& path) {
  write_file_text(path, report_csv(results));
}

}  // namespace melmix
