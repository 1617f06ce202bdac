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

#ifndef LEO_FUSION_HPP_
#define LEO_FUSION_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "leo/geometry.hpp"

namespace leo::fusion {

// Association gates.
constexpr double kHausdorffGate = 2.0;          // meters
constexpr double kAngleGate = M_PI / 6.0;       // 30 degrees
constexpr double kFusionSlot = 0.02;            // seconds
constexpr double kCovDetFloor = 1e-12;
constexpr double kDefaultWidth = 2.0;           // meters, I-shape extension width

// The seven track sources feeding the fusion layer.
enum class SensorId : uint8_t { LRL = 0, LRR, MMRFR, MMRFL, MPC, LIDAR_CONTOUR, SMPC };
constexpr int kNumSensors = 7;

const char * sensor_name(SensorId id);
SensorId sensor_from_name(const std::string & name);

// One sensor's object hypothesis: kinematic state, covariance and up to
// three extension points.
struct SensorTrack {
  SensorId sensor_id = SensorId::LRL;
  int object_id = 0;
  double timestamp = 0.0;
  Eigen::Vector4d state = Eigen::Vector4d::Zero();       // x, y, v_x, v_y
  Eigen::Matrix4d state_cov = Eigen::Matrix4d::Identity();
  geom::ShapePrimitive shape;

  void validate() const;
};

struct AssociationDecision {
  geom::Segment seg_a;
  geom::Segment seg_b;
  double hausdorff = 0.0;
  double angle_diff = 0.0;
  bool associated = false;
};

struct FusedLabel {
  geom::ParallelogramState state;
  std::vector<Eigen::Matrix2d> endpoint_covs;
  std::set<SensorId> contributing_sensors;
};

// Hausdorff < 2 m AND acute direction angle < 30 deg.
AssociationDecision associate(const geom::Segment & seg_a, const geom::Segment & seg_b);

// Covariance intersection of two point estimates:
//   fused_precision = w * cov1^-1 + (1-w) * cov2^-1.
std::pair<geom::Point2, Eigen::Matrix2d> ci_fuse_point(const geom::Point2 & p1, const Eigen::Matrix2d & cov1,
                                                       const geom::Point2 & p2, const Eigen::Matrix2d & cov2,
                                                       double omega);

// Determinant-minimizing omega over the 101-point grid {0, 0.01, ..., 1};
// first minimum wins ties.
double select_omega(const Eigen::Matrix2d & cov1, const Eigen::Matrix2d & cov2);

// Inverse-determinant confidence weight.
double endpoint_weight(const Eigen::Matrix2d & cov);

// Fuse all of one object's tracks inside a single 20 ms fusion slot into a
// parallelogram label.
FusedLabel fuse_tracks(const std::vector<SensorTrack> & tracks);

}  // namespace leo::fusion

#endif  // LEO_FUSION_HPP_
