// Copyright 2026 The leofuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "leo/gat.hpp"
#include "leo/training.hpp"

namespace {

using namespace leo;

struct Fixture {
  gat::GatConfig cfg;
  gat::ParamStore params;
  std::vector<graph::FusionGraph> graphs;

  Fixture() {
    sim::ScenarioConfig sc;
    sc.kind = sim::ScenarioKind::CUT_IN;
    sc.seed = 1;
    sc.duration = 2.0;
    auto frames = sim::generate_scenario(sc);
    auto windows = graph::build_windows(frames, graph::LabelSource::TRUTH);
    auto stats = graph::compute_feature_stats(windows);
    for (const auto & w : windows) graphs.push_back(graph::normalize_features(w, stats));
    params = gat::init_params(cfg);
  }
};

Fixture & fixture() {
  static Fixture f;
  return f;
}

void BM_ForwardSingle(benchmark::State & state) {
  auto & f = fixture();
  size_t i = 0;
  for (auto _ : state) {
    auto pred = gat::predict(f.params, f.cfg, f.graphs[i++ % f.graphs.size()]);
    benchmark::DoNotOptimize(pred);
  }
}
BENCHMARK(BM_ForwardSingle)->Unit(benchmark::kMillisecond);

void BM_ForwardBatch128(benchmark::State & state) {
  auto & f = fixture();
  std::vector<const graph::FusionGraph *> batch;
  for (int i = 0; i < 128; ++i) batch.push_back(&f.graphs[static_cast<size_t>(i) % f.graphs.size()]);
  for (auto _ : state) {
    nn::Tape tape;
    auto bound = gat::bind(tape, f.params, false);
    auto raw = gat::forward_batch(tape, bound, f.cfg, batch, {});
    benchmark::DoNotOptimize(raw.values().data());
  }
}
BENCHMARK(BM_ForwardBatch128)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State & state) {
  auto & f = fixture();
  std::vector<const graph::FusionGraph *> batch;
  std::vector<geom::ParallelogramState> labels;
  for (int i = 0; i < 32; ++i) {
    const auto & g = f.graphs[static_cast<size_t>(i) % f.graphs.size()];
    batch.push_back(&g);
    labels.push_back(g.target);
  }
  train::LossConfig lcfg;
  for (auto _ : state) {
    nn::Tape tape;
    auto bound = gat::bind(tape, f.params, true);
    gat::ForwardOptions opt;
    opt.training = true;
    auto raw = gat::forward_batch(tape, bound, f.cfg, batch, opt);
    auto loss = train::total_loss_t(raw, labels, lcfg);
    tape.backward(loss);
    benchmark::DoNotOptimize(loss.value());
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_PolygonOverlap(benchmark::State & state) {
  geom::ParallelogramState a{10, 2, 4.5, 1.8, 0.2, 1.4, 0, 0};
  geom::ParallelogramState b{10.8, 2.3, 4.2, 1.9, 0.25, 1.5, 0, 0};
  auto pa = geom::state_to_polygon(a);
  auto pb = geom::state_to_polygon(b);
  for (auto _ : state) {
    benchmark::DoNotOptimize(geom::giou(pa, pb));
    benchmark::DoNotOptimize(geom::diou(pa, pb));
  }
}
BENCHMARK(BM_PolygonOverlap);

void BM_FuseTracks(benchmark::State & state) {
  auto & f = fixture();
  sim::ScenarioConfig sc;
  sc.kind = sim::ScenarioKind::HIGHWAY_FOLLOW;
  sc.seed = 2;
  sc.duration = 1.0;
  auto frames = sim::generate_scenario(sc);
  const sim::Frame * frame = nullptr;
  for (const auto & fr : frames) {
    if (fr.tracks.size() >= 3) frame = &fr;
  }
  (void)f;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fusion::fuse_tracks(frame->tracks));
  }
}
BENCHMARK(BM_FuseTracks);

}  // namespace

BENCHMARK_MAIN();
