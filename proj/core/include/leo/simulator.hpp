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

#ifndef LEO_SIMULATOR_HPP_
#define LEO_SIMULATOR_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "leo/fusion.hpp"
#include "leo/geometry.hpp"
#include "leo/rng.hpp"

namespace leo::sim {

constexpr double kFrameInterval = 0.02;  // 20 ms fusion grid

struct EgoState {
  double v = 0.0;         // m/s, [0, 38.9]
  double yaw_rate = 0.0;  // rad/s, [-0.6, 0.6]
  double a = 0.0;         // m/s^2, [-10, 5]
  double timestamp = 0.0;
};

enum class ScenarioKind : uint8_t { HIGHWAY_FOLLOW = 0, CUT_IN, OCCLUSION, ARTICULATED };

const char * scenario_kind_name(ScenarioKind k);
ScenarioKind scenario_kind_from_name(const std::string & name);

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::HIGHWAY_FOLLOW;
  double duration = 4.0;                // seconds
  uint64_t seed = 0;
  double target_length = 4.5;           // meters, [3, 75]
  double target_width = 1.8;            // meters
  double sensor_dropout_prob = 0.0;     // per raw observation
  double noise_scale = 1.0;             // multiplies every noise sigma
  int scenario_id = 0;                  // dataset-level tag used for splits

  void validate() const;  // throws InvalidConfig
};

enum class Lane : uint8_t { EL = 0, LL, RL, OTHER };
const char * lane_name(Lane l);
Lane lane_from_name(const std::string & name);

// Lane partition by centroid lateral position: EL [-1.5,1.5], LL (1.5,4.5],
// RL [-4.5,-1.5).
Lane lane_from_lateral(double y);

struct Frame {
  double fusion_timestamp = 0.0;  // multiple of 20 ms
  int scenario_id = 0;
  std::vector<fusion::SensorTrack> tracks;
  EgoState ego;
  geom::ParallelogramState truth;
  Lane lane = Lane::OTHER;
  std::optional<fusion::FusedLabel> fused;  // filled by the `label` command
};

// Per-sensor model: field of view, mount direction, rate, range behaviour
// and the noise law  sigma(r) = sigma0 * r / 10 m.
struct SensorModel {
  fusion::SensorId id;
  double rate_hz;
  double fov;             // full opening angle, radians
  double boresight;       // mount azimuth in ego frame
  double max_range;       // meters
  double point_range;     // beyond this a RADAR degrades to a point return
  double sigma0;          // meters at 10 m range
  double radial_scale;
  double tangential_scale;
  double sigma_v;         // m/s
  bool high_res;          // can resolve both edges (L shape)
  bool penetrates;        // RADAR sees through occluders
};

const std::vector<SensorModel> & sensor_models();

// One sensor observation of the target. `occluder`, when present, blocks
// line of sight for non-penetrating sensors. Returns nullopt when the
// target is out of FOV/range, fully occluded or dropped out.
std::optional<fusion::SensorTrack> sense_target(const geom::ParallelogramState & truth,
                                                fusion::SensorId sensor_id, const EgoState & ego, Rng & rng,
                                                double timestamp,
                                                const std::optional<geom::ConvexPolygon> & occluder = std::nullopt,
                                                double dropout_prob = 0.0, double noise_scale = 1.0);

// Deterministic scenario synthesis: native-rate observations slotted to the
// 20 ms fusion grid, ground-truth parallelogram per frame.
std::vector<Frame> generate_scenario(const ScenarioConfig & cfg);

}  // namespace leo::sim

#endif  // LEO_SIMULATOR_HPP_
