#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "melmix/features.hpp"
#include "melmix/model.hpp"
#include "melmix/synth_data.hpp"

namespace melmix {

struct TrainConfig {
  int batch_size = 32;
  int total_steps = 20000;
  int warmup_steps = 2000;  // 10% of total
  float peak_lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float adam_eps = 1e-8f;
  float grad_clip = 1.0f;  // global norm
  std::uint64_t seed = 1;
  int k = 3;  // consonant emphasis factor for alignment
  int eval_interval = 500;

  void validate() const;
};

// One L-frame training window. Padded tail positions carry PAD/silence ids,
// log-floor mel and a zero mask flag.
struct SegmentExample {
  std::vector<int> pitch_ids;
  std::vector<int> phoneme_ids;
  Matrix target;              // L x d_mel
  std::vector<std::uint8_t> mask;  // 1 = real frame

  std::size_t real_frames() const;
};

using AlignedPair = std::pair<FrameAlignment, MelSpectrogram>;

// Aligns each song of a synthetic dataset against its oracle mel.
std::vector<AlignedPair> make_training_pairs(const std::vector<SongData>& songs,
                                             int k, const Vocab& vocab);

// Cuts every pair into non-overlapping L-frame windows; the final partial
// window is padded. Frame-count mismatches are alignment errors.
std::vector<SegmentExample> segment_corpus(const std::vector<AlignedPair>& pairs,
                                           int seq_len,
                                           float mel_pad_value = -11.512925f);

// Linear warmup to peak_lr at warmup_steps, then linear decay to zero at
// total_steps.
float lr_at(std::int64_t step, const TrainConfig& cfg);

// One optimization step over the examples picked by batch_indices.
// Gradients are clipped at cfg.grad_clip global norm; Adam uses
// lr_at(step + 1). Throws NumericError on a non-finite loss.
float train_step(ModelParams& params, std::vector<AdamState>& adam,
                 const std::vector<SegmentExample>& examples,
                 std::span<const std::size_t> batch_indices, std::uint64_t step,
                 const TrainConfig& cfg, ThreadPool* pool);

// Deterministic batch composition: a seeded permutation per epoch.
std::vector<std::size_t> batch_indices_for_step(std::size_t n_examples,
                                                std::size_t batch_size,
                                                std::uint64_t step,
                                                std::uint64_t seed);

struct EvalResult {
  double l1 = 0.0;
  double mcd = 0.0;
};

// Masked L1 and MCD over the holdout segments, eval mode.
EvalResult evaluate(const ModelParams& params,
                    const std::vector<SegmentExample>& holdout, ThreadPool* pool);

struct TrainLoopOptions {
  std::string checkpoint_path;  // empty: no checkpoints
  std::string log_csv_path;     // empty: no log
  std::uint64_t start_step = 0;
  std::uint64_t stop_step = 0;  // 0: run to total_steps (interrupt point)
  // Called after every step with (step, loss); used by tests.
  std::function<void(std::uint64_t, float)> on_step;
};

struct TrainResult {
  EvalResult final_eval;
  std::uint64_t steps_run = 0;
};

// Runs steps [start_step, total_steps): evaluates, logs a
// "step,lr,train_l1,val_l1,val_mcd" row and checkpoints every eval_interval
// and at the end.
TrainResult train_loop(ModelParams& params, std::vector<AdamState>& adam,
                       const std::vector<SegmentExample>& train_examples,
                       const std::vector<SegmentExample>& val_examples,
                       const TrainConfig& cfg, const TrainLoopOptions& options,
                       ThreadPool* pool);

}  // namespace melmix
