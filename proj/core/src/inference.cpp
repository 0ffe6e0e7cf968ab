#include "melmix/inference.hpp"

#include <atomic>
#include <chrono>
#include <cstring>

namespace melmix {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void check_plan_inputs(std::int64_t total_frames, int seq_len) {
  if (total_frames < 1) throw ParameterError("plan: total_frames must be >= 1");
  if (seq_len < 1) throw ParameterError("plan: seq_len must be >= 1");
}

// Fills the chunk's id window from the alignment, padding past the end.
void fill_chunk_ids(const FrameAlignment& alignment, std::int64_t chunk_start,
                    int seq_len, int* pitch_out, int* phoneme_out) {
  const std::int64_t F = static_cast<std::int64_t>(alignment.frames);
  for (int i = 0; i < seq_len; ++i) {
    const std::int64_t f = chunk_start + i;
    if (f < F) {
      pitch_out[i] = alignment.pitch_ids[static_cast<std::size_t>(f)];
      phoneme_out[i] = alignment.phoneme_ids[static_cast<std::size_t>(f)];
    } else {
      pitch_out[i] = Vocab::kSilencePitchId;
      phoneme_out[i] = kPadPhonemeId;
    }
  }
}

void check_plan_covers(const FrameAlignment& alignment,
                       const SegmentationPlan& plan) {
  if (plan.total_frames != static_cast<std::int64_t>(alignment.frames)) {
    throw RangeError("synthesize: plan length does not match the alignment");
  }
}

}  // namespace

SegmentationPlan plan_naive(std::int64_t total_frames, int seq_len) {
  check_plan_inputs(total_frames, seq_len);
  SegmentationPlan plan;
  plan.mode = PlanMode::kNaive;
  plan.total_frames = total_frames;
  plan.seq_len = seq_len;
  plan.overlap = 0;
  for (std::int64_t start = 0; start < total_frames; start += seq_len) {
    plan.chunks.push_back({start, start, std::min<std::int64_t>(start + seq_len,
                                                                total_frames)});
  }
  return plan;
}

SegmentationPlan plan_overlapped(std::int64_t total_frames, int seq_len, int w) {
  check_plan_inputs(total_frames, seq_len);
  if (w < 0 || 2 * w >= seq_len) {
    throw ParameterError("plan_overlapped: overlap must satisfy 0 <= w < L/2");
  }
  SegmentationPlan plan;
  plan.mode = PlanMode::kOverlapped;
  plan.total_frames = total_frames;
  plan.seq_len = seq_len;
  plan.overlap = w;

  const std::int64_t stride = seq_len - 2 * w;
  std::int64_t n_chunks = 1;
  if (total_frames > seq_len - w) {
    // Smallest count with (n-1)*stride + L - w >= F.
    const std::int64_t num = total_frames - seq_len + w;
    n_chunks = (num + stride - 1) / stride + 1;
  }
  for (std::int64_t j = 0; j < n_chunks; ++j) {
    Chunk c;
    c.chunk_start = j * stride;
    c.emit_start = j == 0 ? 0 : c.chunk_start + w;
    c.emit_end = j == n_chunks - 1 ? total_frames : c.chunk_start + seq_len - w;
    plan.chunks.push_back(c);
  }
  return plan;
}

namespace {

SynthesisResult synthesize_impl(const FrameAlignment& alignment,
                                const ModelParams& params,
                                const SegmentationPlan& plan, ThreadPool* pool,
                                bool sequential) {
  check_plan_covers(alignment, plan);
  if (plan.seq_len != params.config.seq_len) {
    throw RangeError("synthesize: plan seq_len does not match the model");
  }
  const int L = plan.seq_len;
  const std::size_t bins = static_cast<std::size_t>(params.config.d_mel);
  const std::size_t n_chunks = plan.chunks.size();

  SynthesisResult result;
  result.mel = Matrix(static_cast<std::size_t>(plan.total_frames), bins);

  if (sequential) {
    // One chunk at a time; each forward depends on the previous one having
    // fully materialized.
    std::atomic<std::uint64_t> barrier{0};
    const auto t0 = Clock::now();
    BatchInput input;
    input.segments = 1;
    input.seq_len = static_cast<std::size_t>(L);
    input.pitch_ids.resize(static_cast<std::size_t>(L));
    input.phoneme_ids.resize(static_cast<std::size_t>(L));
    for (const Chunk& c : plan.chunks) {
      fill_chunk_ids(alignment, c.chunk_start, L, input.pitch_ids.data(),
                     input.phoneme_ids.data());
      const Matrix pred = forward_batch_eval(params, input, nullptr);
      const std::size_t count = static_cast<std::size_t>(c.emit_end - c.emit_start);
      const std::size_t local = static_cast<std::size_t>(c.emit_start - c.chunk_start);
      std::memcpy(result.mel.data() + static_cast<std::size_t>(c.emit_start) * bins,
                  pred.data() + local * bins, count * bins * sizeof(float));
      barrier.fetch_add(1, std::memory_order_seq_cst);
    }
    result.timing.forward_ms = ms_since(t0);
    return result;
  }

  const auto t_plan = Clock::now();
  BatchInput input;
  input.segments = n_chunks;
  input.seq_len = static_cast<std::size_t>(L);
  input.pitch_ids.resize(n_chunks * static_cast<std::size_t>(L));
  input.phoneme_ids.resize(n_chunks * static_cast<std::size_t>(L));
  const auto fill_one = [&](std::size_t i) {
    fill_chunk_ids(alignment, plan.chunks[i].chunk_start, L,
                   input.pitch_ids.data() + i * static_cast<std::size_t>(L),
                   input.phoneme_ids.data() + i * static_cast<std::size_t>(L));
  };
  if (pool) {
    pool->parallel_for(n_chunks, fill_one);
  } else {
    for (std::size_t i = 0; i < n_chunks; ++i) fill_one(i);
  }
  result.timing.plan_ms = ms_since(t_plan);

  const auto t_fwd = Clock::now();
  const Matrix pred = forward_batch_eval(params, input, pool);
  result.timing.forward_ms = ms_since(t_fwd);

  const auto t_stitch = Clock::now();
  const auto stitch_one = [&](std::size_t i) {
    const Chunk& c = plan.chunks[i];
    const std::size_t count = static_cast<std::size_t>(c.emit_end - c.emit_start);
    const std::size_t local = static_cast<std::size_t>(c.emit_start - c.chunk_start);
    std::memcpy(result.mel.data() + static_cast<std::size_t>(c.emit_start) * bins,
                pred.data() + (i * static_cast<std::size_t>(L) + local) * bins,
                count * bins * sizeof(float));
  };
  if (pool) {
    pool->parallel_for(n_chunks, stitch_one);
  } else {
    for (std::size_t i = 0; i < n_chunks; ++i) stitch_one(i);
  }
  result.timing.stitch_ms = ms_since(t_stitch);
  return result;
}

}  // namespace

SynthesisResult synthesize(const FrameAlignment& alignment,
                           const ModelParams& params,
                           const SegmentationPlan& plan, ThreadPool* pool) {
  return synthesize_impl(alignment, params, plan, pool, false);
}

SynthesisResult synthesize_sequential(const FrameAlignment& alignment,
                                      const ModelParams& params,
                                      const SegmentationPlan& plan) {
  return synthesize_impl(alignment, params, plan, nullptr, true);
}

}  // namespace melmix
