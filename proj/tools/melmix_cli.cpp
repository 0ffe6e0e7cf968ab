// melmix command line: dataset generation, feature extraction, training,
// synthesis, analysis and latency benchmarks behind one binary.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "melmix/analysis.hpp"
#include "melmix/bench.hpp"
#include "melmix/inference.hpp"
#include "melmix/model.hpp"
#include "melmix/smf.hpp"
#include "melmix/synth_data.hpp"
#include "melmix/tensor_file.hpp"
#include "melmix/trainer.hpp"
#include "melmix/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
  melmix::ModelConfig model;
  melmix::TrainConfig train;
  std::string infer_mode = "overlapped";
  int infer_w = 30;
  int pitch_base = 55;
  int threads = 0;  // 0 = hardware concurrency
  std::uint64_t seed = 1;
  int songs = 40;
  int val_songs = 4;
  double seconds_per_song = 30.0;
};

json run_config_to_json(const RunConfig& rc) {
  json j;
  j["model"] = json::parse(melmix::serialize_model_config(rc.model));
  j["train"] = {{"batch_size", rc.train.batch_size},
                {"total_steps", rc.train.total_steps},
                {"warmup_steps", rc.train.warmup_steps},
                {"peak_lr", rc.train.peak_lr},
                {"beta1", rc.train.beta1},
                {"beta2", rc.train.beta2},
                {"adam_eps", rc.train.adam_eps},
                {"grad_clip", rc.train.grad_clip},
                {"k", rc.train.k},
                {"eval_interval", rc.train.eval_interval}};
  j["infer"] = {{"mode", rc.infer_mode}, {"w", rc.infer_w}};
  j["data"] = {{"songs", rc.songs},
               {"val_songs", rc.val_songs},
               {"seconds_per_song", rc.seconds_per_song},
               {"pitch_base", rc.pitch_base}};
  j["seed"] = rc.seed;
  j["threads"] = rc.threads;
  return j;
}

void run_config_from_json(const json& j, RunConfig& rc) {
  try {
    if (j.contains("model")) {
      rc.model = melmix::parse_model_config(j["model"].dump());
    }
    if (j.contains("train")) {
      const json& t = j["train"];
      rc.train.batch_size = t.value("batch_size", rc.train.batch_size);
      rc.train.total_steps = t.value("total_steps", rc.train.total_steps);
      rc.train.warmup_steps = t.value("warmup_steps", rc.train.warmup_steps);
      rc.train.peak_lr = t.value("peak_lr", rc.train.peak_lr);
      rc.train.beta1 = t.value("beta1", rc.train.beta1);
      rc.train.beta2 = t.value("beta2", rc.train.beta2);
      rc.train.adam_eps = t.value("adam_eps", rc.train.adam_eps);
      rc.train.grad_clip = t.value("grad_clip", rc.train.grad_clip);
      rc.train.k = t.value("k", rc.train.k);
      rc.train.eval_interval = t.value("eval_interval", rc.train.eval_interval);
    }
    if (j.contains("infer")) {
      rc.infer_mode = j["infer"].value("mode", rc.infer_mode);
      rc.infer_w = j["infer"].value("w", rc.infer_w);
    }
    if (j.contains("data")) {
      const json& d = j["data"];
      rc.songs = d.value("songs", rc.songs);
      rc.val_songs = d.value("val_songs", rc.val_songs);
      rc.seconds_per_song = d.value("seconds_per_song", rc.seconds_per_song);
      rc.pitch_base = d.value("pitch_base", rc.pitch_base);
    }
    rc.seed = j.value("seed", rc.seed);
    rc.threads = j.value("threads", rc.threads);
  } catch (const json::exception& e) {
    throw melmix::ConfigError(std::string("config file: ") + e.what());
  }
}

void dump_effective_config(const RunConfig& rc, const std::string& artifact_path) {
  melmix::write_file_text(artifact_path + ".config.json",
                          run_config_to_json(rc).dump(2) + "\n");
}

int effective_threads(const RunConfig& rc) {
  if (rc.threads > 0) return rc.threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

melmix::SynthConfig make_synth_config(const RunConfig& rc) {
  melmix::SynthConfig sc;
  sc.songs = rc.songs + rc.val_songs;
  sc.seconds_per_song = rc.seconds_per_song;
  sc.seed = rc.seed;
  sc.k = rc.train.k;
  sc.vocab.pitch_base = rc.pitch_base;
  sc.mel_bins = rc.model.d_mel;
  return sc;
}

std::string song_stem(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "song_%03d", index);
  return buf;
}

// ---- data directory helpers ----

struct DataSet {
  std::vector<melmix::SongData> train;
  std::vector<melmix::SongData> val;
};

DataSet load_data_dir(const std::string& dir) {
  const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
  json manifest;
  try {
    manifest = json::parse(melmix::read_file_text(manifest_path));
  } catch (const json::exception& e) {
    throw melmix::FormatError("manifest: " + std::string(e.what()));
  }
  DataSet ds;
  const auto load_split = [&](const char* key, std::vector<melmix::SongData>& out) {
    if (!manifest.contains(key)) return;
    for (const auto& stem : manifest[key]) {
      const std::string base = (fs::path(dir) / stem.get<std::string>()).string();
      melmix::SongData song;
      song.score =
          melmix::parse_score_json(melmix::read_file_text(base + ".score.json"));
      song.mel = melmix::read_mel_file(base + ".mel1");
      out.push_back(std::move(song));
    }
  };
  load_split("train", ds.train);
  load_split("val", ds.val);
  if (ds.train.empty()) {
    throw melmix::ConfigError("data dir has no training songs: " + dir);
  }
  return ds;
}

melmix::FrameAlignment alignment_for_synth(const melmix::Score& score,
                                           const RunConfig& rc,
                                           std::optional<std::int64_t> frames) {
  melmix::Vocab vocab;
  vocab.pitch_base = rc.pitch_base;
  std::optional<std::size_t> total;
  if (frames) total = static_cast<std::size_t>(*frames);
  return melmix::align_to_frames(score, rc.train.k, vocab, total);
}

// ---- subcommands ----

int cmd_make_data(const RunConfig& rc, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const melmix::SynthConfig sc = make_synth_config(rc);
  const auto songs = melmix::synth_dataset(sc);
  json manifest;
  manifest["train"] = json::array();
  manifest["val"] = json::array();
  for (int i = 0; i < static_cast<int>(songs.size()); ++i) {
    const std::string stem = song_stem(i);
    const std::string base = (fs::path(out_dir) / stem).string();
    melmix::write_file_text(base + ".score.json",
                            melmix::serialize_score_json(songs[i].score));
    melmix::write_mel_file(base + ".mel1", songs[i].mel);
    manifest[i < rc.songs ? "train" : "val"].push_back(stem);
  }
  const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();
  melmix::write_file_text(manifest_path, manifest.dump(2) + "\n");
  dump_effective_config(rc, manifest_path);
  std::printf("wrote %zu songs (%d train, %d val) to %s\n", songs.size(),
              rc.songs, rc.val_songs, out_dir.c_str());
  return 0;
}

int cmd_extract(const RunConfig& rc, const std::string& wav_path,
                const std::string& score_path, const std::string& out_path) {
  const melmix::Waveform w = melmix::read_wav(melmix::read_file_bytes(wav_path));
  const melmix::MelSpectrogram mel = melmix::extract_mel(w);
  if (!score_path.empty()) {
    const melmix::Score score =
        melmix::parse_score_json(melmix::read_file_text(score_path));
    // Validates that the score fits inside the audio.
    alignment_for_synth(score, rc, static_cast<std::int64_t>(mel.rows()));
  }
  melmix::write_mel_file(out_path, mel);
  dump_effective_config(rc, out_path);
  std::printf("wrote %zu frames x %zu bins to %s\n", mel.rows(), mel.cols(),
              out_path.c_str());
  return 0;
}

int cmd_train(RunConfig rc, const std::string& data_dir,
              const std::string& out_path, const std::string& log_path,
              bool resume) {
  rc.train.seed = rc.seed;
  rc.model.validate();
  rc.train.validate();

  const DataSet ds = load_data_dir(data_dir);
  melmix::Vocab vocab;
  vocab.pitch_base = rc.pitch_base;
  const auto train_pairs =
      melmix::make_training_pairs(ds.train, rc.train.k, vocab);
  const auto val_pairs = melmix::make_training_pairs(ds.val, rc.train.k, vocab);
  const auto train_examples =
      melmix::segment_corpus(train_pairs, rc.model.seq_len);
  const auto val_examples = melmix::segment_corpus(val_pairs, rc.model.seq_len);

  melmix::ModelParams params;
  std::vector<melmix::AdamState> adam;
  std::uint64_t start_step = 0;
  if (resume) {
    melmix::Checkpoint ckpt = melmix::load_checkpoint(out_path);
    if (!(ckpt.params.config == rc.model)) {
      throw melmix::ConfigError("resume: checkpoint config differs from the "
                                "requested model config");
    }
    if (ckpt.adam.empty()) {
      throw melmix::ConfigError("resume: checkpoint has no optimizer state");
    }
    params = std::move(ckpt.params);
    adam = std::move(ckpt.adam);
    start_step = ckpt.step;
  } else {
    params = melmix::init_params(rc.model, rc.seed);
    for (melmix::Param* p : params.all_params()) adam.emplace_back(*p);
  }

  melmix::ThreadPool pool(static_cast<std::size_t>(effective_threads(rc)));
  melmix::TrainLoopOptions options;
  options.checkpoint_path = out_path;
  options.log_csv_path = log_path;
  options.start_step = start_step;
  const melmix::TrainResult result = melmix::train_loop(
      params, adam, train_examples, val_examples, rc.train, options, &pool);
  dump_effective_config(rc, out_path);
  std::printf("trained %llu steps; val l1 %.6f, val mcd %.4f; checkpoint %s\n",
              static_cast<unsigned long long>(result.steps_run),
              result.final_eval.l1, result.final_eval.mcd, out_path.c_str());
  return 0;
}

int cmd_synth(const RunConfig& rc, const std::string& score_path,
              const std::string& ckpt_path, const std::string& out_path,
              std::optional<std::int64_t> total_frames,
              const std::string& timing_csv) {
  const melmix::Checkpoint ckpt = melmix::load_checkpoint(ckpt_path);
  const melmix::Score score =
      melmix::parse_score_json(melmix::read_file_text(score_path));
  const melmix::FrameAlignment alignment =
      alignment_for_synth(score, rc, total_frames);
  if (alignment.frames == 0) {
    throw melmix::DegenerateInputError("synth: the score has no frames");
  }

  melmix::SegmentationPlan plan;
  if (rc.infer_mode == "naive") {
    plan = melmix::plan_naive(static_cast<std::int64_t>(alignment.frames),
                              ckpt.params.config.seq_len);
  } else if (rc.infer_mode == "overlapped") {
    plan = melmix::plan_overlapped(static_cast<std::int64_t>(alignment.frames),
                                   ckpt.params.config.seq_len, rc.infer_w);
  } else {
    throw melmix::ConfigError("synth: mode must be naive or overlapped");
  }

  melmix::ThreadPool pool(static_cast<std::size_t>(effective_threads(rc)));
  const melmix::SynthesisResult result =
      melmix::synthesize(alignment, ckpt.params, plan, &pool);
  melmix::write_mel_file(out_path, result.mel);
  dump_effective_config(rc, out_path);
  if (!timing_csv.empty()) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "phase,ms\nplan,%.6f\nforward,%.6f\nstitch,%.6f\n",
                  result.timing.plan_ms, result.timing.forward_ms,
                  result.timing.stitch_ms);
    melmix::write_file_text(timing_csv, buf);
  }
  std::printf("synthesized %zu frames (%zu chunks, mode %s) to %s\n",
              result.mel.rows(), plan.chunks.size(), rc.infer_mode.c_str(),
              out_path.c_str());
  return 0;
}

int cmd_analyze_probe(const RunConfig& rc, const std::string& ckpt_path,
                      const std::string& out_dir, int block) {
  const melmix::Checkpoint ckpt = melmix::load_checkpoint(ckpt_path);
  fs::create_directories(out_dir);
  std::vector<int> blocks;
  if (block >= 0) {
    blocks.push_back(block);
  } else {
    for (int i = 0; i < ckpt.params.config.n_blocks; ++i) blocks.push_back(i);
  }
  std::string summary = "block,diagonal_constancy,bandwidth\n";
  for (int bi : blocks) {
    const melmix::ProbeResult probe = melmix::identity_probe(ckpt.params, bi);
    const std::string stem =
        (fs::path(out_dir) / ("probe_block" + std::to_string(bi))).string();
    melmix::export_heatmap(probe.response, stem + ".pgm");
    char line[96];
    std::snprintf(line, sizeof(line), "%d,%.9g,%d\n", bi,
                  probe.diagonal_constancy, probe.bandwidth);
    summary += line;
  }
  const std::string summary_path =
      (fs::path(out_dir) / "probe_summary.csv").string();
  melmix::write_file_text(summary_path, summary);
  dump_effective_config(rc, summary_path);
  std::printf("%s", summary.c_str());
  return 0;
}

int cmd_analyze_loss_profile(const RunConfig& rc, const std::string& ckpt_path,
                             const std::string& data_dir,
                             const std::string& out_path) {
  const melmix::Checkpoint ckpt = melmix::load_checkpoint(ckpt_path);
  const DataSet ds = load_data_dir(data_dir);
  melmix::Vocab vocab;
  vocab.pitch_base = rc.pitch_base;
  const auto& songs = ds.val.empty() ? ds.train : ds.val;
  const auto pairs = melmix::make_training_pairs(songs, rc.train.k, vocab);
  const auto segments =
      melmix::segment_corpus(pairs, ckpt.params.config.seq_len);

  melmix::ThreadPool pool(static_cast<std::size_t>(effective_threads(rc)));
  const std::vector<double> profile =
      melmix::loss_profile(ckpt.params, segments, &pool);

  std::string csv = "position,mean_abs_error\n";
  char line[64];
  for (std::size_t i = 0; i < profile.size(); ++i) {
    std::snprintf(line, sizeof(line), "%zu,%.9g\n", i, profile[i]);
    csv += line;
  }
  melmix::write_file_text(out_path, csv);
  dump_effective_config(rc, out_path);

  // Edge-vs-middle summary over the first/last 5% vs the middle half.
  const std::size_t L = profile.size();
  const std::size_t edge = std::max<std::size_t>(1, L / 20);
  double edge_sum = 0.0, mid_sum = 0.0;
  std::size_t edge_n = 0, mid_n = 0;
  for (std::size_t i = 0; i < L; ++i) {
    if (i < edge || i >= L - edge) {
      edge_sum += profile[i];
      ++edge_n;
    } else if (i >= L / 4 && i < 3 * L / 4) {
      mid_sum += profile[i];
      ++mid_n;
    }
  }
  const double edge_mean = edge_n ? edge_sum / edge_n : 0.0;
  const double mid_mean = mid_n ? mid_sum / mid_n : 0.0;
  std::printf("loss profile: edge mean %.6f, middle mean %.6f, ratio %.3f\n",
              edge_mean, mid_mean, mid_mean > 0 ? edge_mean / mid_mean : 0.0);
  return 0;
}

int cmd_bench(const RunConfig& rc, const std::string& ckpt_path,
              const std::string& frames_arg, const std::string& modes_arg,
              int repeats, int warmup, const std::string& out_path) {
  melmix::ModelParams params;
  if (!ckpt_path.empty()) {
    params = melmix::load_checkpoint(ckpt_path).params;
  } else {
    params = melmix::init_params(rc.model, rc.seed);
  }

  melmix::BenchConfig bc;
  bc.repeats = repeats;
  bc.warmup = warmup;
  bc.overlap = rc.infer_w;
  bc.threads = effective_threads(rc);
  bc.seed = rc.seed;
  {
    std::stringstream ss(frames_arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) bc.frame_counts.push_back(std::stoll(tok));
    }
  }
  if (bc.frame_counts.empty()) {
    throw melmix::ConfigError("bench: no frame counts given");
  }

  std::vector<melmix::BenchMode> modes;
  {
    std::stringstream ss(modes_arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok == "batched") {
        modes.push_back(melmix::BenchMode::kBatched);
      } else if (tok == "sequential") {
        modes.push_back(melmix::BenchMode::kSequential);
      } else if (tok == "batched_overlapped") {
        modes.push_back(melmix::BenchMode::kBatchedOverlapped);
      } else if (!tok.empty()) {
        throw melmix::ConfigError("bench: unknown mode " + tok);
      }
    }
  }
  if (modes.empty()) throw melmix::ConfigError("bench: no modes given");

  const auto results = melmix::measure(params, bc, modes);
  const std::string csv = melmix::report_csv(results);
  if (!out_path.empty()) {
    melmix::write_file_text(out_path, csv);
    dump_effective_config(rc, out_path);
  }
  std::printf("threads=%d\n%s", bc.threads, csv.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"melmix: an all-MLP singing-voice acoustic model"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags (--seed, --threads, --config) may follow
                      // the subcommand

  RunConfig rc;
  std::string config_path;

  // The config file is applied before flag parsing so that explicit flags
  // always win; find it with a pre-scan.
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      config_path = argv[i + 1];
    } else if (arg.rfind("--config=", 0) == 0) {
      config_path = arg.substr(9);
    }
  }
  if (!config_path.empty()) {
    try {
      run_config_from_json(
          nlohmann::json::parse(melmix::read_file_text(config_path)), rc);
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "error: config file: " << e.what() << std::endl;
      return 1;
    } catch (const melmix::Error& e) {
      std::cerr << "error: " << e.what() << std::endl;
      return 1;
    }
  }

  std::string config_path_sink;
  app.add_option("--config", config_path_sink,
                 "JSON config file; flags override it")
      ->expected(1);
  app.add_option("--seed", rc.seed, "seed for every random choice")
      ->capture_default_str();
  app.add_option("--threads", rc.threads, "worker threads (0 = hardware)")
      ->capture_default_str();

  // Model hyperparameters (shared by train/bench).
  auto add_model_flags = [&](CLI::App* cmd) {
    cmd->add_option("--n-blocks", rc.model.n_blocks, "mixer blocks")
        ->capture_default_str();
    cmd->add_option("--seq-len", rc.model.seq_len, "segment length L (frames)")
        ->capture_default_str();
    cmd->add_option("--d-phoneme", rc.model.d_phoneme, "phoneme embedding width")
        ->capture_default_str();
    cmd->add_option("--d-pitch", rc.model.d_pitch, "pitch embedding width")
        ->capture_default_str();
    cmd->add_option("--d-mel", rc.model.d_mel, "mel bins")
        ->capture_default_str();
    cmd->add_option("--hidden-channel", rc.model.hidden_channel,
                    "channel-mixer hidden width")
        ->capture_default_str();
    cmd->add_option("--hidden-token", rc.model.hidden_token,
                    "token-mixer hidden width")
        ->capture_default_str();
    cmd->add_option("--dropout", rc.model.dropout_p, "dropout probability")
        ->capture_default_str();
    cmd->add_flag("--ablate-token-mixer", rc.model.ablate_token_mixer,
                  "channel-mixer-only variant");
  };

  // make-data
  std::string out_dir;
  CLI::App* make_data =
      app.add_subcommand("make-data", "generate the synthetic corpus");
  make_data->add_option("--out", out_dir, "output directory")->required();
  make_data->add_option("--songs", rc.songs, "training songs")
      ->capture_default_str();
  make_data->add_option("--val-songs", rc.val_songs, "validation songs")
      ->capture_default_str();
  make_data->add_option("--seconds", rc.seconds_per_song, "seconds per song")
      ->capture_default_str();
  make_data->add_option("--k", rc.train.k, "consonant emphasis frames")
      ->capture_default_str();
  make_data->add_option("--pitch-base", rc.pitch_base, "lowest MIDI note")
      ->capture_default_str();

  // extract
  std::string wav_path, score_path, out_path;
  CLI::App* extract =
      app.add_subcommand("extract", "WAV (+score) to MEL1 features");
  extract->add_option("--wav", wav_path, "input 16 kHz mono PCM16 WAV")->required();
  extract->add_option("--score", score_path, "score JSON used for validation");
  extract->add_option("--out", out_path, "output MEL1 file")->required();

  // train
  std::string data_dir, log_path, ckpt_path;
  bool resume = false;
  CLI::App* train = app.add_subcommand("train", "train a model");
  train->add_option("--data", data_dir, "data directory from make-data")
      ->required();
  train->add_option("--out", ckpt_path, "checkpoint path (TEN1)")->required();
  train->add_option("--log", log_path, "training CSV log path");
  train->add_option("--steps", rc.train.total_steps, "total steps")
      ->capture_default_str();
  train->add_option("--warmup", rc.train.warmup_steps,
                    "warmup steps (default 10% of --steps)");
  train->add_option("--batch", rc.train.batch_size, "batch size")
      ->capture_default_str();
  train->add_option("--lr", rc.train.peak_lr, "peak learning rate")
      ->capture_default_str();
  train->add_option("--beta1", rc.train.beta1, "Adam beta1")
      ->capture_default_str();
  train->add_option("--beta2", rc.train.beta2, "Adam beta2")
      ->capture_default_str();
  train->add_option("--grad-clip", rc.train.grad_clip, "global-norm clip")
      ->capture_default_str();
  train->add_option("--eval-interval", rc.train.eval_interval,
                    "steps between evals/checkpoints")
      ->capture_default_str();
  train->add_option("--k", rc.train.k, "consonant emphasis frames")
      ->capture_default_str();
  train->add_option("--pitch-base", rc.pitch_base, "lowest MIDI note")
      ->capture_default_str();
  train->add_flag("--resume", resume, "continue from the checkpoint at --out");
  add_model_flags(train);

  // synth
  std::string synth_score, synth_ckpt, synth_out, timing_csv;
  std::int64_t synth_frames = -1;
  CLI::App* synth = app.add_subcommand("synth", "score to mel spectrogram");
  synth->add_option("--score", synth_score, "score JSON")->required();
  synth->add_option("--ckpt", synth_ckpt, "model checkpoint")->required();
  synth->add_option("--out", synth_out, "output MEL1 file")->required();
  synth->add_option("--mode", rc.infer_mode, "naive|overlapped")
      ->capture_default_str();
  synth->add_option("--w", rc.infer_w, "overlap window frames")
      ->capture_default_str();
  synth->add_option("--k", rc.train.k, "consonant emphasis frames")
      ->capture_default_str();
  synth->add_option("--pitch-base", rc.pitch_base, "lowest MIDI note")
      ->capture_default_str();
  synth->add_option("--total-frames", synth_frames,
                    "force output frame count (-1 = from the score)");
  synth->add_option("--timing-csv", timing_csv, "write phase timing CSV");

  // analyze
  CLI::App* analyze = app.add_subcommand("analyze", "interpretability exports");
  analyze->require_subcommand(1);
  std::string an_ckpt, an_out_dir = ".", an_data, an_out = "loss_profile.csv";
  int an_block = -1;
  CLI::App* probe = analyze->add_subcommand(
      "probe", "token-mixer identity probes (PGM + CSV per block)");
  probe->add_option("--ckpt", an_ckpt, "model checkpoint")->required();
  probe->add_option("--out-dir", an_out_dir, "output directory")
      ->capture_default_str();
  probe->add_option("--block", an_block, "single block index (-1 = all)")
      ->capture_default_str();
  CLI::App* loss_prof = analyze->add_subcommand(
      "loss-profile", "per-position loss over the validation split");
  loss_prof->add_option("--ckpt", an_ckpt, "model checkpoint")->required();
  loss_prof->add_option("--data", an_data, "data directory")->required();
  loss_prof->add_option("--out", an_out, "output CSV path")
      ->capture_default_str();
  loss_prof->add_option("--k", rc.train.k, "consonant emphasis frames")
      ->capture_default_str();
  loss_prof->add_option("--pitch-base", rc.pitch_base, "lowest MIDI note")
      ->capture_default_str();

  // bench
  std::string bench_ckpt, bench_frames = "4800", bench_out;
  std::string bench_modes = "batched,sequential,batched_overlapped";
  int bench_repeats = 20, bench_warmup = 2;
  CLI::App* bench = app.add_subcommand("bench", "latency / real-time factor");
  bench->add_option("--ckpt", bench_ckpt, "checkpoint (default: fresh init)");
  bench->add_option("--frames", bench_frames, "comma-separated frame counts")
      ->capture_default_str();
  bench->add_option("--modes", bench_modes, "comma-separated modes")
      ->capture_default_str();
  bench->add_option("--repeats", bench_repeats, "timed repeats per point")
      ->capture_default_str();
  bench->add_option("--warmup", bench_warmup, "untimed warmup runs")
      ->capture_default_str();
  bench->add_option("--w", rc.infer_w, "overlap window frames")
      ->capture_default_str();
  bench->add_option("--out", bench_out, "output CSV path");
  add_model_flags(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << std::endl;
    return 2;
  }

  try {
    // Default warmup: 10% of total steps when not explicitly set.
    if (train->parsed() && train->count("--warmup") == 0) {
      rc.train.warmup_steps = rc.train.total_steps / 10;
    }

    if (make_data->parsed()) return cmd_make_data(rc, out_dir);
    if (extract->parsed()) return cmd_extract(rc, wav_path, score_path, out_path);
    if (train->parsed()) return cmd_train(rc, data_dir, ckpt_path, log_path, resume);
    if (synth->parsed()) {
      std::optional<std::int64_t> frames;
      if (synth_frames >= 0) frames = synth_frames;
      return cmd_synth(rc, synth_score, synth_ckpt, synth_out, frames, timing_csv);
    }
    if (probe->parsed()) {
      return cmd_analyze_probe(rc, an_ckpt, an_out_dir, an_block);
    }
    if (loss_prof->parsed()) {
      return cmd_analyze_loss_profile(rc, an_ckpt, an_data, an_out);
    }
    if (bench->parsed()) {
      return cmd_bench(rc, bench_ckpt, bench_frames, bench_modes, bench_repeats,
                       bench_warmup, bench_out);
    }
  } catch (const melmix::Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
