#include "melmix/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>

#include <json.hpp>

#include "melmix/simd_math.hpp"
#include "melmix/tensor_file.hpp"

namespace melmix {

namespace {

// Dropout sites within a block; the stream tag is block*4 + site.
enum DropSite { kChannelHidden = 0, kChannelOut = 1, kTokenHidden = 2, kTokenOut = 3 };

void run_row_blocks(ThreadPool* pool, std::size_t rows,
                    const std::function<void(std::size_t, std::size_t)>& fn) {
  const std::size_t threads = pool ? pool->thread_count() : 1;
  if (threads <= 1 || rows < 64) {
    fn(0, rows);
    return;
  }
  std::size_t block = (rows + threads * 2 - 1) / (threads * 2);
  block = (block + 3) & ~std::size_t{3};  // multiple of 4 suits the kernel
  const std::size_t n_blocks = (rows + block - 1) / block;
  pool->parallel_for(n_blocks, [&](std::size_t b) {
    const std::size_t r0 = b * block;
    const std::size_t r1 = std::min(rows, r0 + block);
    fn(r0, r1);
  });
}

// In-place-safe gelu over a contiguous span, tiled through a stack buffer.
void gelu_span(const float* x, float* y, std::size_t n) {
  constexpr std::size_t kTile = 2048;
  float xbuf[kTile];
  for (std::size_t off = 0; off < n; off += kTile) {
    const std::size_t m = std::min(kTile, n - off);
    std::memcpy(xbuf, x + off, m * sizeof(float));
    float* yo = y + off;
    for (std::size_t i = 0; i < m; ++i) yo[i] = xbuf[i] * 0.7071067811865476f;
    erf_f32(yo, yo, m);
    for (std::size_t i = 0; i < m; ++i) yo[i] = 0.5f * xbuf[i] * (1.0f + yo[i]);
  }
}

void gelu_rows(Matrix& m, std::size_t r0, std::size_t r1) {
  gelu_span(m.data() + r0 * m.cols(), m.data() + r0 * m.cols(), (r1 - r0) * m.cols());
}

// Layernorm rows [r0, r1) of x into rows [out_r0, ...) of out.
void layernorm_rows_to(const Matrix& x, const Matrix& gamma, const Matrix& beta,
                       float eps, Matrix& out, std::size_t r0, std::size_t r1,
                       std::size_t out_r0) {
  const std::size_t C = x.cols();
  const float* g = gamma.data();
  const float* b = beta.data();
  for (std::size_t r = r0; r < r1; ++r) {
    const float* xr = x.data() + r * C;
    float* yr = out.data() + (out_r0 + (r - r0)) * C;
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) sum += xr[c];
    const double mean = sum / static_cast<double>(C);
    double sq = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double d = xr[c] - mean;
      sq += d * d;
    }
    const float inv = static_cast<float>(1.0 / std::sqrt(sq / C + eps));
    const float mu = static_cast<float>(mean);
    for (std::size_t c = 0; c < C; ++c) yr[c] = (xr[c] - mu) * inv * g[c] + b[c];
  }
}

void add_rows(Matrix& dst, const Matrix& src, std::size_t r0, std::size_t r1) {
  const std::size_t C = dst.cols();
  float* d = dst.data() + r0 * C;
  const float* s = src.data() + r0 * C;
  const std::size_t n = (r1 - r0) * C;
  for (std::size_t i = 0; i < n; ++i) d[i] += s[i];
}

// Inverted-dropout mask over a span; element (base + i) keeps its value iff
// stream.uniform(base + i) >= p.
void dropout_range(float* data, std::size_t n, float p, const RngStream& stream,
                   std::uint64_t base) {
  const float scale = 1.0f / (1.0f - p);
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = stream.uniform(base + i) >= p ? data[i] * scale : 0.0f;
  }
}

// Threaded matmul; each output row is computed by exactly one thread with a
// fixed reduction order, so the result is thread-count independent.
void pmatmul(ThreadPool* pool, const Matrix& a, const Matrix& b, Matrix& out) {
  if (out.rows() != a.rows() || out.cols() != b.cols()) {
    out = Matrix(a.rows(), b.cols());
  }
  run_row_blocks(pool, a.rows(), [&](std::size_t r0, std::size_t r1) {
    matmul_rows(a, b, out, r0, r1);
  });
}

// dw += x^T dy, db += column sums of dy.
void accumulate_affine_grads(ThreadPool* pool, const Matrix& x, const Matrix& dy,
                             Param& w, Param& b) {
  Matrix xt = transpose(x);
  Matrix dw;
  pmatmul(pool, xt, dy, dw);
  add_inplace(w.grad, dw);
  const std::size_t N = dy.cols();
  for (std::size_t j = 0; j < N; ++j) {
    double s = 0.0;
    for (std::size_t r = 0; r < dy.rows(); ++r) s += dy.data()[r * N + j];
    b.grad.data()[j] += static_cast<float>(s);
  }
}

Param make_param(std::string name, std::size_t rows, std::size_t cols) {
  return Param(std::move(name), rows, cols);
}

}  // namespace

void ModelConfig::validate() const {
  if (n_blocks < 0) throw ConfigError("model: n_blocks must be >= 0");
  if (seq_len <= 0) throw ConfigError("model: seq_len must be > 0");
  if (d_phoneme <= 0 || d_pitch <= 0 || d_mel <= 0 || hidden_channel <= 0) {
    throw ConfigError("model: embedding/hidden widths must be > 0");
  }
  if (!ablate_token_mixer && hidden_token <= 0) {
    throw ConfigError("model: hidden_token must be > 0");
  }
  if (dropout_p < 0.0f || dropout_p >= 1.0f) {
    throw ConfigError("model: dropout must satisfy 0 <= p < 1");
  }
  if (phoneme_vocab <= 0 || pitch_vocab <= 0) {
    throw ConfigError("model: vocabulary sizes must be > 0");
  }
}

ModelConfig ablated_config_like(const ModelConfig& base) {
  ModelConfig cfg = base;
  cfg.ablate_token_mixer = true;
  cfg.n_blocks = base.n_blocks * 3 / 2;
  cfg.hidden_channel = base.hidden_channel * 3 / 4;
  cfg.hidden_token = 0;
  return cfg;
}

std::size_t param_count(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t D = static_cast<std::size_t>(cfg.d_model());
  const std::size_t Dhc = static_cast<std::size_t>(cfg.hidden_channel);
  const std::size_t Dht = static_cast<std::size_t>(cfg.hidden_token);
  const std::size_t L = static_cast<std::size_t>(cfg.seq_len);
  std::size_t block = 2 * D + D * Dhc + Dhc + Dhc * D + D;
  if (!cfg.ablate_token_mixer) {
    block += 2 * D + L * Dht + Dht + Dht * L + L;
  }
  return static_cast<std::size_t>(cfg.phoneme_vocab) * cfg.d_phoneme +
         static_cast<std::size_t>(cfg.pitch_vocab) * cfg.d_pitch + D * D + D +
         static_cast<std::size_t>(cfg.n_blocks) * block + D * cfg.d_mel + cfg.d_mel;
}

namespace {

ModelParams make_params(const ModelConfig& cfg) {
  cfg.validate();
  ModelParams p;
  p.config = cfg;
  const std::size_t D = static_cast<std::size_t>(cfg.d_model());
  p.phoneme_embed = make_param("embed.phoneme", cfg.phoneme_vocab, cfg.d_phoneme);
  p.pitch_embed = make_param("embed.pitch", cfg.pitch_vocab, cfg.d_pitch);
  p.in_w = make_param("proj.in.w", D, D);
  p.in_b = make_param("proj.in.b", 1, D);
  p.blocks.resize(static_cast<std::size_t>(cfg.n_blocks));
  for (int i = 0; i < cfg.n_blocks; ++i) {
    const std::string prefix = "block." + std::to_string(i) + ".";
    BlockParams& b = p.blocks[static_cast<std::size_t>(i)];
    b.ln1_gamma = make_param(prefix + "ln1.gamma", 1, D);
    b.ln1_beta = make_param(prefix + "ln1.beta", 1, D);
    b.channel_w1 = make_param(prefix + "channel.w1", D, cfg.hidden_channel);
    b.channel_b1 = make_param(prefix + "channel.b1", 1, cfg.hidden_channel);
    b.channel_w2 = make_param(prefix + "channel.w2", cfg.hidden_channel, D);
    b.channel_b2 = make_param(prefix + "channel.b2", 1, D);
    if (!cfg.ablate_token_mixer) {
      b.ln2_gamma = make_param(prefix + "ln2.gamma", 1, D);
      b.ln2_beta = make_param(prefix + "ln2.beta", 1, D);
      b.token_w1 = make_param(prefix + "token.w1", cfg.seq_len, cfg.hidden_token);
      b.token_b1 = make_param(prefix + "token.b1", 1, cfg.hidden_token);
      b.token_w2 = make_param(prefix + "token.w2", cfg.hidden_token, cfg.seq_len);
      b.token_b2 = make_param(prefix + "token.b2", 1, cfg.seq_len);
    }
  }
  p.out_w = make_param("proj.out.w", D, cfg.d_mel);
  p.out_b = make_param("proj.out.b", 1, cfg.d_mel);
  return p;
}

}  // namespace

std::vector<Param*> ModelParams::all_params() {
  std::vector<Param*> out;
  out.push_back(&phoneme_embed);
  out.push_back(&pitch_embed);
  out.push_back(&in_w);
  out.push_back(&in_b);
  for (BlockParams& b : blocks) {
    out.push_back(&b.ln1_gamma);
    out.push_back(&b.ln1_beta);
    out.push_back(&b.channel_w1);
    out.push_back(&b.channel_b1);
    out.push_back(&b.channel_w2);
    out.push_back(&b.channel_b2);
    if (!config.ablate_token_mixer) {
      out.push_back(&b.ln2_gamma);
      out.push_back(&b.ln2_beta);
      out.push_back(&b.token_w1);
      out.push_back(&b.token_b1);
      out.push_back(&b.token_w2);
      out.push_back(&b.token_b2);
    }
  }
  out.push_back(&out_w);
  out.push_back(&out_b);
  return out;
}

std::vector<const Param*> ModelParams::all_params() const {
  auto mut = const_cast<ModelParams*>(this)->all_params();
  return {mut.begin(), mut.end()};
}

void ModelParams::zero_grads() {
  for (Param* p : all_params()) p->zero_grad();
}

std::size_t ModelParams::tensor_size_sum() const {
  std::size_t total = 0;
  for (const Param* p : all_params()) total += p->value.size();
  return total;
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p = make_params(cfg);
  const RngStream root{seed, 0x696e6974ull};
  std::size_t tensor_idx = 0;
  for (Param* param : p.all_params()) {
    const RngStream stream = root.fork(tensor_idx++);
    const std::string& n = param->name;
    float* d = param->value.data();
    const std::size_t count = param->value.size();
    if (n.starts_with("embed.")) {
      for (std::size_t i = 0; i < count; ++i) d[i] = 0.02f * stream.normal(i);
    } else if (n.find(".gamma") != std::string::npos) {
      param->value.fill(1.0f);
    } else if (n.find(".beta") != std::string::npos || n.ends_with(".b") ||
               n.ends_with(".b1") || n.ends_with(".b2")) {
      // zeros
    } else {
      const float bound = 1.0f / std::sqrt(static_cast<float>(param->value.rows()));
      for (std::size_t i = 0; i < count; ++i) d[i] = stream.uniform(i, -bound, bound);
    }
  }
  return p;
}

// ---- forward ----

namespace {

void check_ids(const ModelConfig& cfg, std::span<const int> pitch_ids,
               std::span<const int> phoneme_ids) {
  for (int id : pitch_ids) {
    if (id < 0 || id >= cfg.pitch_vocab) {
      throw VocabError("pitch id " + std::to_string(id) + " outside vocabulary");
    }
  }
  for (int id : phoneme_ids) {
    if (id < 0 || id >= cfg.phoneme_vocab) {
      throw VocabError("phoneme id " + std::to_string(id) + " outside vocabulary");
    }
  }
}

void embed_rows(const ModelParams& params, const BatchInput& batch, Matrix& out,
                std::size_t r0, std::size_t r1) {
  const std::size_t Dc = static_cast<std::size_t>(params.config.d_phoneme);
  const std::size_t Dp = static_cast<std::size_t>(params.config.d_pitch);
  const float* pe = params.phoneme_embed.value.data();
  const float* te = params.pitch_embed.value.data();
  for (std::size_t r = r0; r < r1; ++r) {
    float* row = out.data() + r * (Dc + Dp);
    const float* ph = pe + static_cast<std::size_t>(batch.phoneme_ids[r]) * Dc;
    const float* pt = te + static_cast<std::size_t>(batch.pitch_ids[r]) * Dp;
    std::copy(ph, ph + Dc, row);
    std::copy(pt, pt + Dp, row + Dc);
  }
}

struct SegScratch {
  Matrix ln;  // L x D
  Matrix t;   // D x L
  Matrix a2;  // D x Dht
  Matrix o2;  // D x L
};

struct FwdOptions {
  Mode mode = Mode::kEval;
  RngStream rng;
  ForwardCache* cache = nullptr;
  ThreadPool* pool = nullptr;
};

Matrix forward_impl(const ModelParams& params, const BatchInput& batch,
                    const FwdOptions& opt) {
  const ModelConfig& cfg = params.config;
  if (batch.seq_len != static_cast<std::size_t>(cfg.seq_len)) {
    throw DimensionError("forward: segment length must equal seq_len");
  }
  if (batch.pitch_ids.size() != batch.rows() ||
      batch.phoneme_ids.size() != batch.rows()) {
    throw DimensionError("forward: id sequences must hold segments*seq_len ids");
  }
  check_ids(cfg, batch.pitch_ids, batch.phoneme_ids);

  const std::size_t M = batch.rows();
  const std::size_t D = static_cast<std::size_t>(cfg.d_model());
  const std::size_t L = batch.seq_len;
  const float p = cfg.dropout_p;
  const bool drop = opt.mode == Mode::kTrain && p > 0.0f;

  Matrix embedded(M, D);
  Matrix x(M, D);
  run_row_blocks(opt.pool, M, [&](std::size_t r0, std::size_t r1) {
    embed_rows(params, batch, embedded, r0, r1);
    affine_rows(embedded, params.in_w.value, params.in_b.value, x, r0, r1);
  });
  if (opt.cache) {
    opt.cache->embedded = embedded;
    opt.cache->x0 = x;
    opt.cache->blocks.resize(params.blocks.size());
  }

  Matrix h(M, D);
  Matrix a(M, static_cast<std::size_t>(cfg.hidden_channel));
  Matrix o(M, D);
  std::vector<SegScratch> seg_scratch(cfg.ablate_token_mixer ? 0 : batch.segments);

  for (std::size_t bi = 0; bi < params.blocks.size(); ++bi) {
    const BlockParams& blk = params.blocks[bi];
    ForwardCache::BlockCache* bc = opt.cache ? &opt.cache->blocks[bi] : nullptr;
    if (bc) bc->x_in = x;

    // Channel mixer: x += drop(W2 * drop(gelu(W1 * ln1(x) + b1)) + b2).
    // Every step is row-local, so the whole branch runs as one region.
    if (bc) bc->a_channel = Matrix(M, static_cast<std::size_t>(cfg.hidden_channel));
    run_row_blocks(opt.pool, M, [&](std::size_t r0, std::size_t r1) {
      layernorm_rows_to(x, blk.ln1_gamma.value, blk.ln1_beta.value, cfg.ln_eps, h,
                        r0, r1, r0);
      affine_rows(h, blk.channel_w1.value, blk.channel_b1.value, a, r0, r1);
      if (bc) {
        std::memcpy(bc->a_channel.data() + r0 * a.cols(), a.data() + r0 * a.cols(),
                    (r1 - r0) * a.cols() * sizeof(float));
      }
      gelu_rows(a, r0, r1);
      if (drop) {
        dropout_range(a.data() + r0 * a.cols(), (r1 - r0) * a.cols(), p,
                      opt.rng.fork(bi * 4 + kChannelHidden), r0 * a.cols());
      }
      affine_rows(a, blk.channel_w2.value, blk.channel_b2.value, o, r0, r1);
      if (drop) {
        dropout_range(o.data() + r0 * o.cols(), (r1 - r0) * o.cols(), p,
                      opt.rng.fork(bi * 4 + kChannelOut), r0 * o.cols());
      }
      add_rows(x, o, r0, r1);
    });
    if (bc) bc->x_mid = x;

    if (cfg.ablate_token_mixer) continue;

    // Token mixer per segment on the transposed operand.
    if (bc) bc->a_token.resize(batch.segments);
    const auto token_one = [&](std::size_t seg) {
      SegScratch& sc = seg_scratch[seg];
      const std::size_t row0 = seg * L;
      if (sc.ln.rows() != L) {
        sc.ln = Matrix(L, D);
        sc.t = Matrix(D, L);
        sc.a2 = Matrix(D, static_cast<std::size_t>(cfg.hidden_token));
        sc.o2 = Matrix(D, L);
      }
      layernorm_rows_to(x, blk.ln2_gamma.value, blk.ln2_beta.value, cfg.ln_eps,
                        sc.ln, row0, row0 + L, 0);
      transpose_into(sc.ln, sc.t);
      affine_rows(sc.t, blk.token_w1.value, blk.token_b1.value, sc.a2, 0, D);
      if (bc) bc->a_token[seg] = sc.a2;
      gelu_rows(sc.a2, 0, D);
      if (drop) {
        dropout_range(sc.a2.data(), sc.a2.size(), p,
                      opt.rng.fork(bi * 4 + kTokenHidden), seg * sc.a2.size());
      }
      affine_rows(sc.a2, blk.token_w2.value, blk.token_b2.value, sc.o2, 0, D);
      if (drop) {
        dropout_range(sc.o2.data(), sc.o2.size(), p,
                      opt.rng.fork(bi * 4 + kTokenOut), seg * sc.o2.size());
      }
      // x_seg += transpose(o2)
      for (std::size_t c = 0; c < D; ++c) {
        const float* src = sc.o2.data() + c * L;
        for (std::size_t r = 0; r < L; ++r) x.data()[(row0 + r) * D + c] += src[r];
      }
    };
    if (opt.pool) {
      opt.pool->parallel_for(batch.segments, token_one);
    } else {
      for (std::size_t seg = 0; seg < batch.segments; ++seg) token_one(seg);
    }
  }

  if (opt.cache) opt.cache->x_final = x;

  Matrix y(M, static_cast<std::size_t>(cfg.d_mel));
  run_row_blocks(opt.pool, M, [&](std::size_t r0, std::size_t r1) {
    affine_rows(x, params.out_w.value, params.out_b.value, y, r0, r1);
  });
  return y;
}

BatchInput single_segment_batch(const ModelConfig& cfg,
                                std::span<const int> pitch_ids,
                                std::span<const int> phoneme_ids) {
  if (pitch_ids.size() != static_cast<std::size_t>(cfg.seq_len) ||
      phoneme_ids.size() != static_cast<std::size_t>(cfg.seq_len)) {
    throw DimensionError("segment id sequences must be exactly seq_len long");
  }
  BatchInput b;
  b.segments = 1;
  b.seq_len = static_cast<std::size_t>(cfg.seq_len);
  b.pitch_ids.assign(pitch_ids.begin(), pitch_ids.end());
  b.phoneme_ids.assign(phoneme_ids.begin(), phoneme_ids.end());
  return b;
}

}  // namespace

Matrix embed_inputs(const ModelParams& params, std::span<const int> pitch_ids,
                    std::span<const int> phoneme_ids) {
  const BatchInput batch =
      single_segment_batch(params.config, pitch_ids, phoneme_ids);
  check_ids(params.config, batch.pitch_ids, batch.phoneme_ids);
  const std::size_t D = static_cast<std::size_t>(params.config.d_model());
  Matrix embedded(batch.rows(), D);
  embed_rows(params, batch, embedded, 0, batch.rows());
  Matrix x;
  affine_into(embedded, params.in_w.value, params.in_b.value, x);
  return x;
}

Matrix channel_mix(const Matrix& x, const BlockParams& block,
                   const ModelConfig& cfg, Mode mode, const RngStream& rng) {
  if (x.cols() != static_cast<std::size_t>(cfg.d_model())) {
    throw DimensionError("channel_mix: column count must equal d_model");
  }
  const bool drop = mode == Mode::kTrain && cfg.dropout_p > 0.0f;
  Matrix h = layernorm(x, block.ln1_gamma.value, block.ln1_beta.value, cfg.ln_eps);
  Matrix a;
  affine_into(h, block.channel_w1.value, block.channel_b1.value, a);
  gelu_span(a.data(), a.data(), a.size());
  if (drop) dropout_range(a.data(), a.size(), cfg.dropout_p, rng.fork(kChannelHidden), 0);
  Matrix o;
  affine_into(a, block.channel_w2.value, block.channel_b2.value, o);
  if (drop) dropout_range(o.data(), o.size(), cfg.dropout_p, rng.fork(kChannelOut), 0);
  Matrix out = x;
  add_inplace(out, o);
  return out;
}

Matrix token_mix(const Matrix& x, const BlockParams& block,
                 const ModelConfig& cfg, Mode mode, const RngStream& rng) {
  if (block.token_w1.value.empty()) {
    throw CapabilityError("token_mix: this model variant has no token mixers");
  }
  if (x.rows() != static_cast<std::size_t>(cfg.seq_len)) {
    throw DimensionError("token_mix: row count must equal seq_len");
  }
  const bool drop = mode == Mode::kTrain && cfg.dropout_p > 0.0f;
  Matrix h = layernorm(x, block.ln2_gamma.value, block.ln2_beta.value, cfg.ln_eps);
  Matrix t = transpose(h);
  Matrix a;
  affine_into(t, block.token_w1.value, block.token_b1.value, a);
  gelu_span(a.data(), a.data(), a.size());
  if (drop) dropout_range(a.data(), a.size(), cfg.dropout_p, rng.fork(kTokenHidden), 0);
  Matrix o;
  affine_into(a, block.token_w2.value, block.token_b2.value, o);
  if (drop) dropout_range(o.data(), o.size(), cfg.dropout_p, rng.fork(kTokenOut), 0);
  Matrix out = x;
  const std::size_t D = x.cols();
  const std::size_t L = x.rows();
  for (std::size_t c = 0; c < D; ++c) {
    const float* src = o.data() + c * L;
    for (std::size_t r = 0; r < L; ++r) out.data()[r * D + c] += src[r];
  }
  return out;
}

Matrix forward(const ModelParams& params, std::span<const int> pitch_ids,
               std::span<const int> phoneme_ids, Mode mode, const RngStream& rng) {
  const BatchInput batch =
      single_segment_batch(params.config, pitch_ids, phoneme_ids);
  FwdOptions opt;
  opt.mode = mode;
  opt.rng = rng;
  return forward_impl(params, batch, opt);
}

Matrix forward_batch_eval(const ModelParams& params, const BatchInput& batch,
                          ThreadPool* pool) {
  const std::size_t threads = pool ? pool->thread_count() : 1;
  if (threads <= 1 || batch.segments <= 1) {
    FwdOptions opt;
    opt.mode = Mode::kEval;
    return forward_impl(params, batch, opt);
  }

  // Split whole segments into per-thread groups. Each group runs the full
  // pipeline serially on thread-local buffers, so the only shared write is
  // the final copy into disjoint output rows. Row-local math makes the
  // result bitwise independent of the grouping.
  const std::size_t L = batch.seq_len;
  const std::size_t groups = std::min(threads, batch.segments);
  const std::size_t per_group = (batch.segments + groups - 1) / groups;
  Matrix y(batch.rows(), static_cast<std::size_t>(params.config.d_mel));
  pool->parallel_for(groups, [&](std::size_t g) {
    const std::size_t seg0 = g * per_group;
    const std::size_t seg1 = std::min(batch.segments, seg0 + per_group);
    if (seg0 >= seg1) return;
    BatchInput sub;
    sub.segments = seg1 - seg0;
    sub.seq_len = L;
    sub.pitch_ids.assign(batch.pitch_ids.begin() + seg0 * L,
                         batch.pitch_ids.begin() + seg1 * L);
    sub.phoneme_ids.assign(batch.phoneme_ids.begin() + seg0 * L,
                           batch.phoneme_ids.begin() + seg1 * L);
    FwdOptions opt;
    opt.mode = Mode::kEval;
    const Matrix part = forward_impl(params, sub, opt);
    std::memcpy(y.data() + seg0 * L * y.cols(), part.data(),
                part.size() * sizeof(float));
  });
  return y;
}

Matrix forward_batch_train(const ModelParams& params, const BatchInput& batch,
                           const RngStream& rng, ForwardCache& cache,
                           ThreadPool* pool) {
  FwdOptions opt;
  opt.mode = Mode::kTrain;
  opt.rng = rng;
  opt.cache = &cache;
  opt.pool = pool;
  return forward_impl(params, batch, opt);
}

// ---- backward ----

void backward_batch(ModelParams& params, const BatchInput& batch,
                    const ForwardCache& cache, const Matrix& dpred,
                    const RngStream& rng, ThreadPool* pool) {
  const ModelConfig& cfg = params.config;
  const std::size_t M = batch.rows();
  const std::size_t D = static_cast<std::size_t>(cfg.d_model());
  const std::size_t L = batch.seq_len;
  const float p = cfg.dropout_p;
  const bool drop = p > 0.0f;

  if (dpred.rows() != M || dpred.cols() != static_cast<std::size_t>(cfg.d_mel)) {
    throw DimensionError("backward: dpred shape mismatch");
  }

  // Output projection.
  accumulate_affine_grads(pool, cache.x_final, dpred, params.out_w, params.out_b);
  Matrix dx;
  {
    Matrix wt = transpose(params.out_w.value);
    pmatmul(pool, dpred, wt, dx);
  }

  Matrix scratch_ln(M, D);
  for (std::size_t bi = params.blocks.size(); bi-- > 0;) {
    const BlockParams& blk = params.blocks[bi];
    const ForwardCache::BlockCache& bc = cache.blocks[bi];

    if (!cfg.ablate_token_mixer) {
      // Token branch: x_out = x_mid + transpose(ff2(transpose(ln2(x_mid)))).
      Matrix dxmid_extra(M, D);
      for (std::size_t seg = 0; seg < batch.segments; ++seg) {
        const std::size_t row0 = seg * L;
        // Recompute ln2 and its transpose for this segment.
        Matrix ln_seg(L, D);
        layernorm_rows_to(bc.x_mid, blk.ln2_gamma.value, blk.ln2_beta.value,
                          cfg.ln_eps, ln_seg, row0, row0 + L, 0);
        Matrix t = transpose(ln_seg);  // D x L

        // dO2 = transpose of the segment rows of dx.
        Matrix do2(D, L);
        for (std::size_t r = 0; r < L; ++r) {
          for (std::size_t c = 0; c < D; ++c) {
            do2.data()[c * L + r] = dx.data()[(row0 + r) * D + c];
          }
        }
        if (drop) {
          dropout_range(do2.data(), do2.size(), p, rng.fork(bi * 4 + kTokenOut),
                        seg * do2.size());
        }
        // Recompute the dropped hidden activation.
        Matrix g = bc.a_token[seg];
        gelu_span(g.data(), g.data(), g.size());
        if (drop) {
          dropout_range(g.data(), g.size(), p, rng.fork(bi * 4 + kTokenHidden),
                        seg * g.size());
        }
        accumulate_affine_grads(nullptr, g, do2, params.blocks[bi].token_w2,
                                params.blocks[bi].token_b2);
        Matrix dg;
        {
          Matrix wt = transpose(blk.token_w2.value);
          matmul_into(do2, wt, dg);
        }
        if (drop) {
          dropout_range(dg.data(), dg.size(), p, rng.fork(bi * 4 + kTokenHidden),
                        seg * dg.size());
        }
        Matrix da;
        gelu_backward_into(bc.a_token[seg], dg, da);
        accumulate_affine_grads(nullptr, t, da, params.blocks[bi].token_w1,
                                params.blocks[bi].token_b1);
        Matrix dt;
        {
          Matrix wt = transpose(blk.token_w1.value);
          matmul_into(da, wt, dt);  // D x L
        }
        // d(ln2 output) = transpose(dt), then layernorm backward.
        Matrix dln(L, D);
        for (std::size_t c = 0; c < D; ++c) {
          const float* src = dt.data() + c * L;
          for (std::size_t r = 0; r < L; ++r) dln.data()[r * D + c] = src[r];
        }
        Matrix x_mid_seg(L, D);
        std::memcpy(x_mid_seg.data(), bc.x_mid.data() + row0 * D,
                    L * D * sizeof(float));
        Matrix dxm(L, D);
        layernorm_backward(x_mid_seg, blk.ln2_gamma.value, cfg.ln_eps, dln, dxm,
                           params.blocks[bi].ln2_gamma.grad,
                           params.blocks[bi].ln2_beta.grad);
        std::memcpy(dxmid_extra.data() + row0 * D, dxm.data(), L * D * sizeof(float));
      }
      add_inplace(dx, dxmid_extra);
    }

    // Channel branch: x_mid = x_in + drop(W2*drop(gelu(W1*ln1(x_in)+b1))+b2).
    Matrix dout = dx;
    if (drop) {
      dropout_range(dout.data(), dout.size(), p, rng.fork(bi * 4 + kChannelOut), 0);
    }
    Matrix g = bc.a_channel;
    run_row_blocks(pool, M, [&](std::size_t r0, std::size_t r1) {
      gelu_rows(g, r0, r1);
    });
    if (drop) {
      dropout_range(g.data(), g.size(), p, rng.fork(bi * 4 + kChannelHidden), 0);
    }
    accumulate_affine_grads(pool, g, dout, params.blocks[bi].channel_w2,
                            params.blocks[bi].channel_b2);
    Matrix dg;
    {
      Matrix wt = transpose(blk.channel_w2.value);
      pmatmul(pool, dout, wt, dg);
    }
    if (drop) {
      dropout_range(dg.data(), dg.size(), p, rng.fork(bi * 4 + kChannelHidden), 0);
    }
    Matrix da;
    gelu_backward_into(bc.a_channel, dg, da);
    run_row_blocks(pool, M, [&](std::size_t r0, std::size_t r1) {
      layernorm_rows_to(bc.x_in, blk.ln1_gamma.value, blk.ln1_beta.value,
                        cfg.ln_eps, scratch_ln, r0, r1, r0);
    });
    accumulate_affine_grads(pool, scratch_ln, da, params.blocks[bi].channel_w1,
                            params.blocks[bi].channel_b1);
    Matrix dh;
    {
      Matrix wt = transpose(blk.channel_w1.value);
      pmatmul(pool, da, wt, dh);
    }
    Matrix dx_ln(M, D);
    layernorm_backward(bc.x_in, blk.ln1_gamma.value, cfg.ln_eps, dh, dx_ln,
                       params.blocks[bi].ln1_gamma.grad,
                       params.blocks[bi].ln1_beta.grad);
    add_inplace(dx, dx_ln);
  }

  // Input projection and embedding tables.
  accumulate_affine_grads(pool, cache.embedded, dx, params.in_w, params.in_b);
  Matrix de;
  {
    Matrix wt = transpose(params.in_w.value);
    pmatmul(pool, dx, wt, de);
  }
  const std::size_t Dc = static_cast<std::size_t>(cfg.d_phoneme);
  const std::size_t Dp = static_cast<std::size_t>(cfg.d_pitch);
  for (std::size_t r = 0; r < M; ++r) {
    float* pg = params.phoneme_embed.grad.data() +
                static_cast<std::size_t>(batch.phoneme_ids[r]) * Dc;
    float* tg = params.pitch_embed.grad.data() +
                static_cast<std::size_t>(batch.pitch_ids[r]) * Dp;
    const float* src = de.data() + r * (Dc + Dp);
    for (std::size_t c = 0; c < Dc; ++c) pg[c] += src[c];
    for (std::size_t c = 0; c < Dp; ++c) tg[c] += src[Dc + c];
  }
}

// ---- config json / checkpoints ----

namespace {

nlohmann::json config_to_json(const ModelConfig& cfg) {
  return {{"n_blocks", cfg.n_blocks},
          {"seq_len", cfg.seq_len},
          {"d_phoneme", cfg.d_phoneme},
          {"d_pitch", cfg.d_pitch},
          {"d_mel", cfg.d_mel},
          {"hidden_channel", cfg.hidden_channel},
          {"hidden_token", cfg.hidden_token},
          {"dropout_p", cfg.dropout_p},
          {"phoneme_vocab", cfg.phoneme_vocab},
          {"pitch_vocab", cfg.pitch_vocab},
          {"ablate_token_mixer", cfg.ablate_token_mixer},
          {"ln_eps", cfg.ln_eps}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  try {
    cfg.n_blocks = j.value("n_blocks", cfg.n_blocks);
    cfg.seq_len = j.value("seq_len", cfg.seq_len);
    cfg.d_phoneme = j.value("d_phoneme", cfg.d_phoneme);
    cfg.d_pitch = j.value("d_pitch", cfg.d_pitch);
    cfg.d_mel = j.value("d_mel", cfg.d_mel);
    cfg.hidden_channel = j.value("hidden_channel", cfg.hidden_channel);
    cfg.hidden_token = j.value("hidden_token", cfg.hidden_token);
    cfg.dropout_p = j.value("dropout_p", cfg.dropout_p);
    cfg.phoneme_vocab = j.value("phoneme_vocab", cfg.phoneme_vocab);
    cfg.pitch_vocab = j.value("pitch_vocab", cfg.pitch_vocab);
    cfg.ablate_token_mixer = j.value("ablate_token_mixer", cfg.ablate_token_mixer);
    cfg.ln_eps = j.value("ln_eps", cfg.ln_eps);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace

std::string serialize_model_config(const ModelConfig& cfg) {
  return config_to_json(cfg).dump(2) + "\n";
}

ModelConfig parse_model_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  return config_from_json(j);
}

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const std::vector<AdamState>* adam, std::uint64_t step) {
  std::vector<NamedTensor> tensors;
  const auto all = params.all_params();
  for (const Param* p : all) tensors.push_back({p->name, p->value});
  if (adam) {
    if (adam->size() != all.size()) {
      throw DimensionError("save_checkpoint: one Adam state per param required");
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
      tensors.push_back({"adam." + all[i]->name + ".m", (*adam)[i].m});
      tensors.push_back({"adam." + all[i]->name + ".v", (*adam)[i].v});
    }
  }
  write_tensor_file(path, tensors);

  nlohmann::json sidecar;
  sidecar["format"] = "melmix-checkpoint-v1";
  sidecar["model"] = config_to_json(params.config);
  sidecar["step"] = step;
  write_file_text(path + ".json", sidecar.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  nlohmann::json sidecar;
  try {
    sidecar = nlohmann::json::parse(read_file_text(path + ".json"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint sidecar: " + std::string(e.what()));
  }
  if (!sidecar.contains("model")) {
    throw FormatError("checkpoint sidecar: missing model config");
  }
  Checkpoint ckpt;
  ckpt.params = make_params(config_from_json(sidecar["model"]));
  ckpt.step = sidecar.value("step", std::uint64_t{0});

  auto tensors = read_tensor_file(path);
  std::vector<NamedTensor*> by_order;
  auto find = [&](const std::string& name) -> NamedTensor* {
    for (auto& t : tensors) {
      if (t.name == name) return &t;
    }
    return nullptr;
  };

  const auto all = ckpt.params.all_params();
  std::size_t adam_found = 0;
  for (Param* p : all) {
    NamedTensor* t = find(p->name);
    if (!t) throw FormatError("checkpoint: missing tensor " + p->name);
    if (!t->value.same_shape(p->value)) {
      throw FormatError("checkpoint: tensor " + p->name + " has the wrong shape");
    }
    p->value = std::move(t->value);
    if (find("adam." + p->name + ".m")) ++adam_found;
  }
  if (adam_found > 0) {
    if (adam_found != all.size()) {
      throw FormatError("checkpoint: incomplete Adam state");
    }
    ckpt.adam.reserve(all.size());
    for (Param* p : all) {
      NamedTensor* m = find("adam." + p->name + ".m");
      NamedTensor* v = find("adam." + p->name + ".v");
      if (!m || !v) throw FormatError("checkpoint: incomplete Adam state");
      if (!m->value.same_shape(p->value) || !v->value.same_shape(p->value)) {
        throw FormatError("checkpoint: Adam state shape mismatch for " + p->name);
      }
      AdamState st(*p);
      st.m = std::move(m->value);
      st.v = std::move(v->value);
      st.step = ckpt.step;
      ckpt.adam.push_back(std::move(st));
    }
  }
  const std::size_t expected =
      all.size() + (adam_found > 0 ? 2 * all.size() : 0);
  if (tensors.size() != expected) {
    throw FormatError("checkpoint: unexpected extra tensors");
  }
  return ckpt;
}

}  // namespace melmix
