#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "melmix/features.hpp"
#include "melmix/model.hpp"

namespace melmix {

enum class PlanMode { kNaive, kOverlapped };

struct Chunk {
  std::int64_t chunk_start;  // may be padded past the alignment on the right
  std::int64_t emit_start;
  std::int64_t emit_end;
};

// Emit windows tile [0, F) exactly once; every emit window lies inside its
// chunk window [chunk_start, chunk_start + L).
struct SegmentationPlan {
  PlanMode mode = PlanMode::kNaive;
  std::int64_t total_frames = 0;
  int seq_len = 0;
  int overlap = 0;  // w; 0 in naive mode
  std::vector<Chunk> chunks;
};

// Chunks at multiples of L, the last one padded.
SegmentationPlan plan_naive(std::int64_t total_frames, int seq_len);

// Chunk j starts at j*(L-2w) and emits [start+w, start+L-w), except the
// first chunk emits from 0 and the last through F. Requires 0 <= w < L/2.
SegmentationPlan plan_overlapped(std::int64_t total_frames, int seq_len, int w);

struct SynthesisTiming {
  double plan_ms = 0.0;
  double forward_ms = 0.0;
  double stitch_ms = 0.0;
};

struct SynthesisResult {
  MelSpectrogram mel;  // F x d_mel
  SynthesisTiming timing;
};

// Runs every chunk through one batched forward pass and stitches the
// emitted windows. Padded tail frames use PAD/silence ids and are never
// emitted. Eval mode; bitwise equal to per-chunk evaluation.
SynthesisResult synthesize(const FrameAlignment& alignment,
                           const ModelParams& params,
                           const SegmentationPlan& plan,
                           ThreadPool* pool = nullptr);

// Evaluates chunks one at a time in plan order with a dependency barrier
// between them (autoregressive-shaped latency); identical output.
SynthesisResult synthesize_sequential(const FrameAlignment& alignment,
                                      const ModelParams& params,
                                      const SegmentationPlan& plan);

}  // namespace melmix
