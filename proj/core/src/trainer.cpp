#include "melmix/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace melmix {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (total_steps < 0) throw ConfigError("train: total_steps must be >= 0");
  if (warmup_steps < 0 || warmup_steps > total_steps) {
    throw ConfigError("train: warmup must lie in [0, total_steps]");
  }
  if (peak_lr < 0.0f) throw ConfigError("train: peak_lr must be >= 0");
  if (eval_interval < 1) throw ConfigError("train: eval_interval must be >= 1");
  if (k < 0) throw ConfigError("train: k must be >= 0");
}

std::size_t SegmentExample::real_frames() const {
  std::size_t n = 0;
  for (std::uint8_t m : mask) n += m ? 1 : 0;
  return n;
}

std::vector<AlignedPair> make_training_pairs(const std::vector<SongData>& songs,
                                             int k, const Vocab& vocab) {
  std::vector<AlignedPair> pairs;
  pairs.reserve(songs.size());
  for (const SongData& song : songs) {
    FrameAlignment align =
        align_to_frames(song.score, k, vocab, song.mel.rows());
    pairs.emplace_back(std::move(align), song.mel);
  }
  return pairs;
}

std::vector<SegmentExample> segment_corpus(const std::vector<AlignedPair>& pairs,
                                           int seq_len, float mel_pad_value) {
  if (seq_len <= 0) throw ParameterError("segment_corpus: seq_len must be > 0");
  const std::size_t L = static_cast<std::size_t>(seq_len);
  std::vector<SegmentExample> out;
  for (const auto& [align, mel] : pairs) {
    if (align.frames != mel.rows()) {
      throw AlignmentError("segment_corpus: alignment frames != mel frames");
    }
    const std::size_t bins = mel.cols();
    for (std::size_t start = 0; start < align.frames; start += L) {
      const std::size_t real = std::min(L, align.frames - start);
      SegmentExample ex;
      ex.pitch_ids.assign(L, Vocab::kSilencePitchId);
      ex.phoneme_ids.assign(L, kPadPhonemeId);
      ex.mask.assign(L, 0);
      ex.target = Matrix::filled(L, bins, mel_pad_value);
      for (std::size_t i = 0; i < real; ++i) {
        ex.pitch_ids[i] = align.pitch_ids[start + i];
        ex.phoneme_ids[i] = align.phoneme_ids[start + i];
        ex.mask[i] = 1;
      }
      std::memcpy(ex.target.data(), mel.data() + start * bins,
                  real * bins * sizeof(float));
      out.push_back(std::move(ex));
    }
  }
  return out;
}

float lr_at(std::int64_t step, const TrainConfig& cfg) {
  if (step < 0 || step > cfg.total_steps) {
    throw ParameterError("lr_at: step outside [0, total_steps]");
  }
  if (cfg.total_steps == 0) return 0.0f;
  if (step < cfg.warmup_steps) {
    return cfg.peak_lr * static_cast<float>(step) / cfg.warmup_steps;
  }
  const std::int64_t denom =
      std::max<std::int64_t>(1, cfg.total_steps - cfg.warmup_steps);
  return cfg.peak_lr * static_cast<float>(cfg.total_steps - step) / denom;
}

std::vector<std::size_t> batch_indices_for_step(std::size_t n_examples,
                                                std::size_t batch_size,
                                                std::uint64_t step,
                                                std::uint64_t seed) {
  if (n_examples == 0) throw DegenerateInputError("training corpus is empty");
  const std::size_t batch = std::min(batch_size, n_examples);
  const std::size_t steps_per_epoch = std::max<std::size_t>(1, n_examples / batch);
  const std::uint64_t epoch = step / steps_per_epoch;
  const std::size_t slot = static_cast<std::size_t>(step % steps_per_epoch);

  // Seeded Fisher-Yates permutation for this epoch.
  std::vector<std::size_t> perm(n_examples);
  for (std::size_t i = 0; i < n_examples; ++i) perm[i] = i;
  const RngStream rng = RngStream{seed, 0x73687566ull}.fork(epoch);
  for (std::size_t i = n_examples; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.bits(i) % i);
    std::swap(perm[i - 1], perm[j]);
  }
  const std::size_t begin = slot * batch;
  std::vector<std::size_t> out(perm.begin() + begin,
                               perm.begin() + begin + batch);
  return out;
}

namespace {

struct AssembledBatch {
  BatchInput input;
  Matrix target;
  std::vector<std::uint8_t> mask;
};

AssembledBatch assemble(const std::vector<SegmentExample>& examples,
                        std::span<const std::size_t> indices, int seq_len) {
  if (indices.empty()) throw DegenerateInputError("train_step: empty batch");
  const std::size_t L = static_cast<std::size_t>(seq_len);
  const std::size_t bins = examples[indices[0]].target.cols();
  AssembledBatch b;
  b.input.segments = indices.size();
  b.input.seq_len = L;
  b.input.pitch_ids.reserve(indices.size() * L);
  b.input.phoneme_ids.reserve(indices.size() * L);
  b.target = Matrix(indices.size() * L, bins);
  b.mask.reserve(indices.size() * L);
  std::size_t row = 0;
  for (std::size_t idx : indices) {
    const SegmentExample& ex = examples[idx];
    if (ex.pitch_ids.size() != L) {
      throw DimensionError("train_step: example length != seq_len");
    }
    b.input.pitch_ids.insert(b.input.pitch_ids.end(), ex.pitch_ids.begin(),
                             ex.pitch_ids.end());
    b.input.phoneme_ids.insert(b.input.phoneme_ids.end(), ex.phoneme_ids.begin(),
                               ex.phoneme_ids.end());
    b.mask.insert(b.mask.end(), ex.mask.begin(), ex.mask.end());
    std::memcpy(b.target.data() + row * bins, ex.target.data(),
                ex.target.size() * sizeof(float));
    row += L;
  }
  return b;
}

}  // namespace

float train_step(ModelParams& params, std::vector<AdamState>& adam,
                 const std::vector<SegmentExample>& examples,
                 std::span<const std::size_t> batch_indices, std::uint64_t step,
                 const TrainConfig& cfg, ThreadPool* pool) {
  cfg.validate();
  AssembledBatch batch = assemble(examples, batch_indices, params.config.seq_len);

  const RngStream step_rng = RngStream{cfg.seed, 0x74726169ull}.fork(step);
  ForwardCache cache;
  Matrix pred =
      forward_batch_train(params, batch.input, step_rng, cache, pool);
  const float loss = l1_loss(pred, batch.target, &batch.mask);
  if (!std::isfinite(loss)) throw NumericError("train_step: non-finite loss");

  Matrix dpred = l1_loss_backward(pred, batch.target, &batch.mask);
  params.zero_grads();
  backward_batch(params, batch.input, cache, dpred, step_rng, pool);

  auto all = params.all_params();
  if (adam.size() != all.size()) {
    throw DimensionError("train_step: one Adam state per param required");
  }

  // Global-norm gradient clipping, accumulated in a fixed order.
  double sq = 0.0;
  for (Param* p : all) {
    const float* g = p->grad.data();
    for (std::size_t i = 0; i < p->grad.size(); ++i) sq += double(g[i]) * g[i];
  }
  if (!std::isfinite(sq)) throw NumericError("train_step: non-finite gradient");
  const double norm = std::sqrt(sq);
  if (cfg.grad_clip > 0.0f && norm > cfg.grad_clip) {
    const float scale = static_cast<float>(cfg.grad_clip / norm);
    for (Param* p : all) {
      float* g = p->grad.data();
      for (std::size_t i = 0; i < p->grad.size(); ++i) g[i] *= scale;
    }
  }

  const float lr = lr_at(static_cast<std::int64_t>(step) + 1, cfg);
  for (std::size_t i = 0; i < all.size(); ++i) {
    adam_step(*all[i], adam[i], lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
  }
  return loss;
}

EvalResult evaluate(const ModelParams& params,
                    const std::vector<SegmentExample>& holdout, ThreadPool* pool) {
  if (holdout.empty()) throw DegenerateInputError("evaluate: empty holdout");
  const std::size_t L = static_cast<std::size_t>(params.config.seq_len);
  const std::size_t bins = static_cast<std::size_t>(params.config.d_mel);

  double abs_sum = 0.0;
  std::size_t real_total = 0;
  double mcd_weighted = 0.0;

  // Evaluate in bounded batches to keep the working set small.
  const std::size_t kMaxSegs = 64;
  for (std::size_t begin = 0; begin < holdout.size(); begin += kMaxSegs) {
    const std::size_t count = std::min(kMaxSegs, holdout.size() - begin);
    BatchInput input;
    input.segments = count;
    input.seq_len = L;
    for (std::size_t s = 0; s < count; ++s) {
      const SegmentExample& ex = holdout[begin + s];
      input.pitch_ids.insert(input.pitch_ids.end(), ex.pitch_ids.begin(),
                             ex.pitch_ids.end());
      input.phoneme_ids.insert(input.phoneme_ids.end(), ex.phoneme_ids.begin(),
                               ex.phoneme_ids.end());
    }
    const Matrix pred = forward_batch_eval(params, input, pool);
    for (std::size_t s = 0; s < count; ++s) {
      const SegmentExample& ex = holdout[begin + s];
      const std::size_t real = ex.real_frames();
      if (real == 0) continue;
      Matrix pred_slice(real, bins), target_slice(real, bins);
      std::size_t out_r = 0;
      for (std::size_t r = 0; r < L; ++r) {
        if (!ex.mask[r]) continue;
        std::memcpy(pred_slice.data() + out_r * bins,
                    pred.data() + (s * L + r) * bins, bins * sizeof(float));
        std::memcpy(target_slice.data() + out_r * bins,
                    ex.target.data() + r * bins, bins * sizeof(float));
        ++out_r;
      }
      for (std::size_t i = 0; i < pred_slice.size(); ++i) {
        abs_sum += std::fabs(double(pred_slice.data()[i]) -
                             double(target_slice.data()[i]));
      }
      mcd_weighted += mcd(pred_slice, target_slice) * static_cast<double>(real);
      real_total += real;
    }
  }
  if (real_total == 0) throw DegenerateInputError("evaluate: all frames masked");
  EvalResult res;
  res.l1 = abs_sum / (static_cast<double>(real_total) * bins);
  res.mcd = mcd_weighted / static_cast<double>(real_total);
  return res;
}

TrainResult train_loop(ModelParams& params, std::vector<AdamState>& adam,
                       const std::vector<SegmentExample>& train_examples,
                       const std::vector<SegmentExample>& val_examples,
                       const TrainConfig& cfg, const TrainLoopOptions& options,
                       ThreadPool* pool) {
  cfg.validate();
  std::ofstream log;
  if (!options.log_csv_path.empty()) {
    const bool fresh = options.start_step == 0;
    log.open(options.log_csv_path, fresh ? std::ios::trunc : std::ios::app);
    if (!log) throw IoError("cannot open training log: " + options.log_csv_path);
    if (fresh) log << "step,lr,train_l1,val_l1,val_mcd\n";
  }

  double interval_loss = 0.0;
  std::size_t interval_count = 0;
  TrainResult result;

  const auto emit = [&](std::uint64_t step_done) {
    const EvalResult ev = val_examples.empty()
                              ? EvalResult{}
                              : evaluate(params, val_examples, pool);
    if (log.is_open()) {
      const float lr = lr_at(static_cast<std::int64_t>(step_done), cfg);
      const double train_l1 =
          interval_count ? interval_loss / interval_count : 0.0;
      char line[160];
      std::snprintf(line, sizeof(line), "%llu,%.9g,%.9g,%.9g,%.9g\n",
                    static_cast<unsigned long long>(step_done), lr, train_l1,
                    ev.l1, ev.mcd);
      log << line;
      log.flush();
    }
    if (!options.checkpoint_path.empty()) {
      save_checkpoint(options.checkpoint_path, params, &adam, step_done);
    }
    interval_loss = 0.0;
    interval_count = 0;
    return ev;
  };

  const std::uint64_t stop =
      options.stop_step > 0
          ? std::min<std::uint64_t>(options.stop_step, cfg.total_steps)
          : static_cast<std::uint64_t>(cfg.total_steps);
  for (std::uint64_t step = options.start_step; step < stop; ++step) {
    const auto indices = batch_indices_for_step(
        train_examples.size(), static_cast<std::size_t>(cfg.batch_size), step,
        cfg.seed);
    const float loss =
        train_step(params, adam, train_examples, indices, step, cfg, pool);
    interval_loss += loss;
    ++interval_count;
    ++result.steps_run;
    if (options.on_step) options.on_step(step, loss);
    const std::uint64_t done = step + 1;
    if (done % static_cast<std::uint64_t>(cfg.eval_interval) == 0 && done < stop) {
      emit(done);
    }
  }
  result.final_eval = emit(stop);
  return result;
}

}  // namespace melmix
