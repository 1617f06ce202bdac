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

#ifndef LEO_GRAPH_HPP_
#define LEO_GRAPH_HPP_

#include <array>
#include <span>
#include <vector>

#include "leo/simulator.hpp"

namespace leo::graph {

// 48-node spatio-temporal fusion graph: 8 sources (7 sensors + ego) x 6
// consecutive 20 ms slots. Slot 0 is the newest.
constexpr int kSources = 8;
constexpr int kEgoSource = 7;
constexpr int kSlots = 6;
constexpr int kNodes = kSources * kSlots;
constexpr int kFeatureDim = 11;
constexpr double kMissingSigma = 1e4;  // m^2 sentinel for a source absent from the window

inline int node_index(int source, int slot) { return source * kSlots + slot; }

struct NodeMeta {
  int source = 0;  // 0..6 sensor modality, 7 ego
  int slot = 0;    // 0 newest .. 5 oldest
};

struct FusionGraph {
  // row-major [48 x 11]
  std::vector<double> features = std::vector<double>(kNodes * kFeatureDim, 0.0);
  std::vector<std::pair<int, int>> edges_temporal;  // (older, newer), 40
  std::vector<std::pair<int, int>> edges_spatial;   // directed both orders, 336
  std::vector<std::pair<int, int>> edges_self;      // 48
  std::vector<NodeMeta> node_meta;                  // 48
  geom::ParallelogramState target;

  int scenario_id = 0;
  double fusion_timestamp = 0.0;  // newest slot
  sim::Lane lane = sim::Lane::OTHER;

  double & at(int node, int dim) { return features[node * kFeatureDim + dim]; }
  double at(int node, int dim) const { return features[node * kFeatureDim + dim]; }
};

// Per-dimension normalization statistics.
struct FeatureStats {
  std::array<double, kFeatureDim> mean{};
  std::array<double, kFeatureDim> std{};
  bool valid = false;
};

// Builds the graph from 6 chronologically ascending frames (consecutive
// 20 ms slots of one object). Holds the last observation forward within the
// window; a source absent from the whole window prefix gets zero features
// with the 1e4 m^2 variance sentinel.
FusionGraph build_graph(std::span<const sim::Frame> window, const geom::ParallelogramState & label);

// z-score of dims 0..9 (delta-t stays raw); std floored at 1e-6.
FusionGraph normalize_features(const FusionGraph & g, const FeatureStats & stats);

FeatureStats compute_feature_stats(const std::vector<FusionGraph> & graphs);

enum class LabelSource { TRUTH, FUSED };

// Every full 6-frame window per scenario, labelled from ground truth or from
// the geometric auto-label (frames without a fused label are skipped in
// FUSED mode).
std::vector<FusionGraph> build_windows(const std::vector<sim::Frame> & frames, LabelSource source);

// Replaces one source's nodes with the missing-sensor sentinel (used by the
// sensor-dropout ablation); operates on unnormalized features.
void blank_source(FusionGraph & g, int source);

}  // namespace leo::graph

#endif  // LEO_GRAPH_HPP_
