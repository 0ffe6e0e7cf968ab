#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "melmix/nn.hpp"
#include "melmix/score.hpp"
#include "melmix/thread_pool.hpp"

namespace melmix {

struct ModelConfig {
  int n_blocks = 16;
  int seq_len = 200;       // L, frames per segment
  int d_phoneme = 256;     // phoneme embedding width
  int d_pitch = 32;        // pitch embedding width
  int d_mel = 120;
  int hidden_channel = 768;  // channel-mixer hidden width
  int hidden_token = 200;    // token-mixer hidden width
  float dropout_p = 0.5f;
  int phoneme_vocab = kPhonemeVocabSize;
  int pitch_vocab = Vocab::kPitchVocabSize;
  bool ablate_token_mixer = false;
  float ln_eps = 1e-5f;

  int d_model() const { return d_phoneme + d_pitch; }
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

// Channel-Mixer-only variant sized to match the default model's parameter
// count: deeper and narrower, no token mixers.
ModelConfig ablated_config_like(const ModelConfig& base);

struct BlockParams {
  Param ln1_gamma, ln1_beta;
  Param channel_w1, channel_b1, channel_w2, channel_b2;
  // Token-mixer tensors; absent (empty) when the model is ablated.
  Param ln2_gamma, ln2_beta;
  Param token_w1, token_b1, token_w2, token_b2;
};

struct ModelParams {
  ModelConfig config;
  Param phoneme_embed;  // V_c x D_c
  Param pitch_embed;    // V_p x D_p
  Param in_w, in_b;     // D x D, 1 x D
  std::vector<BlockParams> blocks;
  Param out_w, out_b;   // D x D_mel, 1 x D_mel

  // Canonical enumeration order; matches the checkpoint tensor order.
  std::vector<Param*> all_params();
  std::vector<const Param*> all_params() const;
  void zero_grads();
  std::size_t tensor_size_sum() const;
};

// Closed-form parameter count for a config.
std::size_t param_count(const ModelConfig& cfg);

// Fan-in-scaled uniform init for affine weights, N(0, 0.02^2) embeddings,
// ones/zeros for layernorm scales/shifts and biases. Seed-deterministic.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

// ---- Single-segment operations (the composition the blocks implement) ----

// Embedding lookup (phoneme ++ pitch) followed by the input projection.
// ids must be exactly seq_len long and within their vocabularies.
Matrix embed_inputs(const ModelParams& params, std::span<const int> pitch_ids,
                    std::span<const int> phoneme_ids);

// x + W2*gelu(layernorm(x)*W1) per row, dropout in train mode.
Matrix channel_mix(const Matrix& x, const BlockParams& block,
                   const ModelConfig& cfg, Mode mode, const RngStream& rng = {});

// x + transpose(feedforward(transpose(layernorm(x)))), layernorm over
// channels. Requires exactly seq_len rows.
Matrix token_mix(const Matrix& x, const BlockParams& block,
                 const ModelConfig& cfg, Mode mode, const RngStream& rng = {});

// Full forward for one segment: embed, N x (channel mix, token mix), output
// projection. Returns seq_len x d_mel.
Matrix forward(const ModelParams& params, std::span<const int> pitch_ids,
               std::span<const int> phoneme_ids, Mode mode,
               const RngStream& rng = {});

// ---- Batched forward/backward over segments ----

struct BatchInput {
  std::size_t segments = 0;
  std::size_t seq_len = 0;
  std::vector<int> pitch_ids;    // segments * seq_len
  std::vector<int> phoneme_ids;  // segments * seq_len

  std::size_t rows() const { return segments * seq_len; }
};

// Eval-mode batched forward: rows of the result are bitwise identical to
// running each segment through forward() on its own. pool may be null.
Matrix forward_batch_eval(const ModelParams& params, const BatchInput& batch,
                          ThreadPool* pool);

// Activation caches for one training step.
struct ForwardCache {
  Matrix embedded;  // rows x D, before the input projection
  Matrix x0;        // rows x D, after the input projection
  struct BlockCache {
    Matrix x_in;                  // block input
    Matrix a_channel;             // channel pre-activation
    Matrix x_mid;                 // after channel residual
    std::vector<Matrix> a_token;  // per segment, token pre-activation
  };
  std::vector<BlockCache> blocks;
  Matrix x_final;
};

// Train-mode batched forward; dropout streams are derived from rng.
Matrix forward_batch_train(const ModelParams& params, const BatchInput& batch,
                           const RngStream& rng, ForwardCache& cache,
                           ThreadPool* pool);

// Accumulates parameter gradients for d(loss)/d(prediction). Results are
// independent of the thread count.
void backward_batch(ModelParams& params, const BatchInput& batch,
                    const ForwardCache& cache, const Matrix& dpred,
                    const RngStream& rng, ThreadPool* pool);

// JSON round-trip for ModelConfig (used by config files and sidecars).
std::string serialize_model_config(const ModelConfig& cfg);
ModelConfig parse_model_config(const std::string& json_text);

// ---- Checkpoints ----

// TEN1 container with canonical tensor names plus a JSON config sidecar at
// path + ".json". When adam states are given they are stored alongside the
// weights as "adam.<name>.m" / "adam.<name>.v".
void save_checkpoint(const std::string& path, const ModelParams& params,
                     const std::vector<AdamState>* adam = nullptr,
                     std::uint64_t step = 0);

struct Checkpoint {
  ModelParams params;
  std::vector<AdamState> adam;  // empty when the file has no optimizer state
  std::uint64_t step = 0;
};

// Validates that every expected tensor is present with the right shape.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace melmix
