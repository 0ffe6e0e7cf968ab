#include <benchmark/benchmark.h>

#include "melmix/bench.hpp"
#include "melmix/inference.hpp"
#include "melmix/synth_data.hpp"

namespace {

const melmix::ModelParams& default_params() {
  static const melmix::ModelParams params =
      melmix::init_params(melmix::ModelConfig{}, 1);
  return params;
}

melmix::FrameAlignment alignment(std::int64_t frames) {
  melmix::SynthConfig sc;
  sc.seconds_per_song = melmix::audio_seconds(frames) + 1.0;
  const melmix::Score score = melmix::random_score(sc, 0);
  return melmix::align_to_frames(score, sc.k, sc.vocab,
                                 static_cast<std::size_t>(frames));
}

void BM_ForwardSegment(benchmark::State& state) {
  const auto& params = default_params();
  melmix::BatchInput batch;
  batch.segments = 1;
  batch.seq_len = 200;
  const melmix::FrameAlignment a = alignment(200);
  batch.pitch_ids.assign(a.pitch_ids.begin(), a.pitch_ids.end());
  batch.phoneme_ids.assign(a.phoneme_ids.begin(), a.phoneme_ids.end());
  for (auto _ : state) {
    const melmix::Matrix y = melmix::forward_batch_eval(params, batch, nullptr);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_ForwardSegment)->Unit(benchmark::kMillisecond);

void BM_SynthesizeBatched(benchmark::State& state) {
  const auto& params = default_params();
  const std::int64_t frames = state.range(0);
  const melmix::FrameAlignment a = alignment(frames);
  melmix::ThreadPool pool(static_cast<std::size_t>(state.range(1)));
  const melmix::SegmentationPlan plan = melmix::plan_naive(frames, 200);
  for (auto _ : state) {
    const auto out = melmix::synthesize(a, params, plan, &pool);
    benchmark::DoNotOptimize(out.mel.data());
  }
  state.counters["rtf"] = benchmark::Counter(
      melmix::audio_seconds(frames) * state.iterations(),
      benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SynthesizeBatched)
    ->Args({4800, 1})
    ->Args({4800, 2})
    ->Args({4800, 4})
    ->Unit(benchmark::kMillisecond);

void BM_SynthesizeSequential(benchmark::State& state) {
  const auto& params = default_params();
  const std::int64_t frames = state.range(0);
  const melmix::FrameAlignment a = alignment(frames);
  const melmix::SegmentationPlan plan = melmix::plan_naive(frames, 200);
  for (auto _ : state) {
    const auto out = melmix::synthesize_sequential(a, params, plan);
    benchmark::DoNotOptimize(out.mel.data());
  }
  state.counters["rtf"] = benchmark::Counter(
      melmix::audio_seconds(frames) * state.iterations(),
      benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SynthesizeSequential)->Arg(4800)->Unit(benchmark::kMillisecond);

}  // namespace
