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

#include "leo/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace leo::graph {

namespace {

constexpr double kSlotTol = 1e-9;

void fill_sentinel(FusionGraph & g, int node) {
  for (int d = 0; d < kFeatureDim; ++d) g.at(node, d) = 0.0;
  g.at(node, 6) = kMissingSigma;
  g.at(node, 7) = kMissingSigma;
}

void fill_from_track(FusionGraph & g, int node, const fusion::SensorTrack & trk, double slot_ts) {
  const auto & pts = trk.shape.extension_points;
  for (size_t i = 0; i < 3; ++i) {
    g.at(node, static_cast<int>(i)) = i < pts.size() ? pts[i].x : 0.0;
    g.at(node, static_cast<int>(3 + i)) = i < pts.size() ? pts[i].y : 0.0;
  }
  double sx = 0.0, sy = 0.0;
  for (const auto & c : trk.shape.point_covariances) {
    sx += c(0, 0);
    sy += c(1, 1);
  }
  double inv = 1.0 / static_cast<double>(trk.shape.point_covariances.size());
  g.at(node, 6) = sx * inv;
  g.at(node, 7) = sy * inv;
  g.at(node, 8) = trk.state(2);
  g.at(node, 9) = trk.state(3);
  g.at(node, 10) = slot_ts - trk.timestamp;
}

}  // namespace

FusionGraph build_graph(std::span<const sim::Frame> window, const geom::ParallelogramState & label) {
  if (window.size() != kSlots) {
    throw WindowSizeMismatch("expected 6 frames, got " + std::to_string(window.size()));
  }
  for (size_t i = 0; i < window.size(); ++i) {
    double ts = window[i].fusion_timestamp;
    double slots = ts / sim::kFrameInterval;
    if (std::abs(slots - std::round(slots)) > kSlotTol / sim::kFrameInterval) {
      throw SlotGapError("frame timestamp " + std::to_string(ts) + " not on the 20 ms grid");
    }
    if (i > 0 && std::abs(window[i].fusion_timestamp - window[i - 1].fusion_timestamp - sim::kFrameInterval) >
                     kSlotTol) {
      throw SlotGapError("frames not at consecutive 20 ms slots");
    }
  }

  FusionGraph g;
  g.target = label;
  g.scenario_id = window.back().scenario_id;
  g.fusion_timestamp = window.back().fusion_timestamp;
  g.lane = window.back().lane;
  g.node_meta.resize(kNodes);
  for (int s = 0; s < kSources; ++s) {
    for (int k = 0; k < kSlots; ++k) g.node_meta[node_index(s, k)] = {s, k};
  }

  // sensor nodes: latest observation at or before the node's slot, held
  // forward across empty slots
  for (int s = 0; s < fusion::kNumSensors; ++s) {
    for (int k = 0; k < kSlots; ++k) {
      int frame_hi = kSlots - 1 - k;  // newest frame index usable by slot k
      double slot_ts = window[frame_hi].fusion_timestamp;
      const fusion::SensorTrack * latest = nullptr;
      for (int f = 0; f <= frame_hi; ++f) {
        for (const auto & trk : window[f].tracks) {
          if (static_cast<int>(trk.sensor_id) != s) continue;
          if (trk.timestamp > slot_ts + kSlotTol) continue;
          if (!latest || trk.timestamp > latest->timestamp) latest = &trk;
        }
      }
      int node = node_index(s, k);
      if (latest) {
        fill_from_track(g, node, *latest, slot_ts);
      } else {
        fill_sentinel(g, node);
      }
    }
  }

  // ego nodes: [v, yaw_rate, a, 0 x 7, dt=0]
  for (int k = 0; k < kSlots; ++k) {
    int node = node_index(kEgoSource, k);
    const sim::EgoState & e = window[kSlots - 1 - k].ego;
    g.at(node, 0) = e.v;
    g.at(node, 1) = e.yaw_rate;
    g.at(node, 2) = e.a;
    g.at(node, 10) = 0.0;
  }

  // edge sets, canonical order
  for (int s = 0; s < kSources; ++s) {
    for (int k = 1; k < kSlots; ++k) {
      g.edges_temporal.emplace_back(node_index(s, k), node_index(s, k - 1));  // past -> present
    }
  }
  for (int k = 0; k < kSlots; ++k) {
    for (int si = 0; si < kSources; ++si) {
      for (int sj = 0; sj < kSources; ++sj) {
        if (si == sj) continue;
        g.edges_spatial.emplace_back(node_index(si, k), node_index(sj, k));
      }
    }
  }
  for (int i = 0; i < kNodes; ++i) g.edges_self.emplace_back(i, i);
  return g;
}

FusionGraph normalize_features(const FusionGraph & g, const FeatureStats & stats) {
  if (!stats.valid) throw MissingStats("feature statistics unavailable");
  for (int d = 0; d < kFeatureDim; ++d) {
    if (!std::isfinite(stats.mean[d]) || !std::isfinite(stats.std[d])) {
      throw MissingStats("non-finite feature statistics");
    }
  }
  FusionGraph out = g;
  for (int n = 0; n < kNodes; ++n) {
    for (int d = 0; d < kFeatureDim - 1; ++d) {  // delta-t stays raw
      double sd = std::max(stats.std[d], 1e-6);
      out.at(n, d) = (g.at(n, d) - stats.mean[d]) / sd;
    }
  }
  return out;
}

FeatureStats compute_feature_stats(const std::vector<FusionGraph> & graphs) {
  FeatureStats st;
  if (graphs.empty()) return st;
  std::array<double, kFeatureDim> sum{};
  std::array<double, kFeatureDim> sum2{};
  size_t n = 0;
  for (const auto & g : graphs) {
    for (int node = 0; node < kNodes; ++node) {
      for (int d = 0; d < kFeatureDim; ++d) {
        double v = g.at(node, d);
        sum[d] += v;
        sum2[d] += v * v;
      }
      ++n;
    }
  }
  for (int d = 0; d < kFeatureDim; ++d) {
    double mu = sum[d] / static_cast<double>(n);
    double var = std::max(sum2[d] / static_cast<double>(n) - mu * mu, 0.0);
    st.mean[d] = mu;
    st.std[d] = std::sqrt(var);
  }
  st.valid = true;
  return st;
}

std::vector<FusionGraph> build_windows(const std::vector<sim::Frame> & frames, LabelSource source) {
  std::map<int, std::vector<const sim::Frame *>> by_scenario;
  for (const auto & f : frames) by_scenario[f.scenario_id].push_back(&f);
  std::vector<FusionGraph> out;
  for (auto & [sid, list] : by_scenario) {
    std::sort(list.begin(), list.end(),
              [](const sim::Frame * a, const sim::Frame * b) { return a->fusion_timestamp < b->fusion_timestamp; });
    for (size_t end = kSlots; end <= list.size(); ++end) {
      std::array<sim::Frame, kSlots> buf;
      bool contiguous = true;
      for (int i = 0; i < kSlots; ++i) {
        buf[i] = *list[end - kSlots + i];
        if (i > 0 &&
            std::abs(buf[i].fusion_timestamp - buf[i - 1].fusion_timestamp - sim::kFrameInterval) > kSlotTol) {
          contiguous = false;
        }
      }
      if (!contiguous) continue;
      const sim::Frame & last = buf.back();
      if (source == LabelSource::FUSED) {
        if (!last.fused) continue;
        out.push_back(build_graph(std::span<const sim::Frame>(buf.data(), kSlots), last.fused->state));
      } else {
        out.push_back(build_graph(std::span<const sim::Frame>(buf.data(), kSlots), last.truth));
      }
    }
  }
  return out;
}

void blank_source(FusionGraph & g, int source) {
  for (int k = 0; k < kSlots; ++k) fill_sentinel(g, node_index(source, k));
}

}  // namespace leo::graph
