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

#include "leo/fusion.hpp"

#include <algorithm>
#include <cmath>

namespace leo::fusion {

namespace {

const char * const kSensorNames[kNumSensors] = {"LRL", "LRR", "MMRFR", "MMRFL", "MPC", "LIDAR_CONTOUR", "SMPC"};

double det2(const Eigen::Matrix2d & m) { return m.determinant(); }

}  // namespace

const char * sensor_name(SensorId id) { return kSensorNames[static_cast<int>(id)]; }

SensorId sensor_from_name(const std::string & name) {
  for (int i = 0; i < kNumSensors; ++i) {
    if (name == kSensorNames[i]) return static_cast<SensorId>(i);
  }
  throw SchemaMismatch("unknown sensor id '" + name + "'");
}

void SensorTrack::validate() const {
  if (timestamp < 0.0) throw InvalidGeometry("negative track timestamp");
  if (!state.allFinite() || !state_cov.allFinite()) throw InvalidGeometry("non-finite track state");
  if ((state_cov - state_cov.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw InvalidGeometry("track covariance not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(state_cov);
  if (es.eigenvalues().minCoeff() < -1e-9) throw InvalidGeometry("track covariance not PSD");
  shape.validate();
}

AssociationDecision associate(const geom::Segment & seg_a, const geom::Segment & seg_b) {
  AssociationDecision d{seg_a, seg_b, geom::hausdorff_segments(seg_a, seg_b), geom::acute_angle(seg_a, seg_b),
                        false};
  d.associated = d.hausdorff < kHausdorffGate && d.angle_diff < kAngleGate;
  return d;
}

std::pair<geom::Point2, Eigen::Matrix2d> ci_fuse_point(const geom::Point2 & p1, const Eigen::Matrix2d & cov1,
                                                       const geom::Point2 & p2, const Eigen::Matrix2d & cov2,
                                                       double omega) {
  if (omega < 0.0 || omega > 1.0) throw Error("omega outside [0,1]");
  if (det2(cov1) <= kCovDetFloor || det2(cov2) <= kCovDetFloor) {
    throw SingularCovariance("covariance determinant below floor");
  }
  // degenerate weights return one operand untouched
  if (omega == 1.0) return {p1, cov1};
  if (omega == 0.0) return {p2, cov2};

  Eigen::Matrix2d prec = omega * cov1.inverse() + (1.0 - omega) * cov2.inverse();
  Eigen::Matrix2d fused_cov = prec.inverse();
  Eigen::Vector2d info = omega * cov1.inverse() * Eigen::Vector2d(p1.x, p1.y) +
                         (1.0 - omega) * cov2.inverse() * Eigen::Vector2d(p2.x, p2.y);
  Eigen::Vector2d mean = fused_cov * info;
  return {geom::Point2{mean.x(), mean.y()}, fused_cov};
}

double select_omega(const Eigen::Matrix2d & cov1, const Eigen::Matrix2d & cov2) {
  if (det2(cov1) <= kCovDetFloor || det2(cov2) <= kCovDetFloor) {
    throw SingularCovariance("covariance determinant below floor");
  }
  Eigen::Matrix2d p1 = cov1.inverse();
  Eigen::Matrix2d p2 = cov2.inverse();
  double best_omega = 0.0;
  double best_det = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 100; ++k) {
    double omega = static_cast<double>(k) / 100.0;
    Eigen::Matrix2d prec = omega * p1 + (1.0 - omega) * p2;
    double det_fused = 1.0 / prec.determinant();
    if (det_fused < best_det) {
      best_det = det_fused;
      best_omega = omega;
    }
  }
  return best_omega;
}

double endpoint_weight(const Eigen::Matrix2d & cov) {
  double d = det2(cov);
  if (d <= kCovDetFloor) throw SingularCovariance("covariance determinant below floor");
  return 1.0 / d;
}

namespace {

double track_weight_sum(const SensorTrack & t) {
  double acc = 0.0;
  for (const auto & c : t.shape.point_covariances) acc += endpoint_weight(c);
  return acc;
}

struct WorkingPoint {
  geom::Point2 p;
  Eigen::Matrix2d cov;
};

void ci_update(WorkingPoint & wp, const geom::Point2 & p, const Eigen::Matrix2d & cov) {
  double omega = select_omega(wp.cov, cov);
  auto fused = ci_fuse_point(wp.p, wp.cov, p, cov, omega);
  wp.p = fused.first;
  wp.cov = fused.second;
}

geom::Point2 rot90(const geom::Point2 & v) { return {-v.y, v.x}; }

// Default-width completion of a two-point (I) working set: the observed
// segment is treated as the length edge and the box extends away from the
// ego origin.
geom::ParallelogramState state_from_i(const geom::Point2 & a, const geom::Point2 & b, double v_x, double v_y) {
  geom::Point2 d = b - a;
  double len = geom::norm(d);
  geom::Point2 u{d.x / len, d.y / len};
  geom::Point2 n = rot90(u);
  geom::Point2 mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
  geom::ParallelogramState s;
  s.l = len;
  s.w = kDefaultWidth;
  s.theta_star = M_PI / 2.0;
  s.v_x = v_x;
  s.v_y = v_y;
  if (geom::dot(n, mid) >= 0.0) {
    s.rf_x = a.x;
    s.rf_y = a.y;
    s.theta = std::atan2(u.y, u.x);
  } else {
    s.rf_x = b.x;
    s.rf_y = b.y;
    s.theta = geom::wrap_angle(std::atan2(u.y, u.x) + M_PI);
  }
  return s;
}

geom::ParallelogramState state_from_point(const geom::Point2 & c, double v_x, double v_y) {
  double speed = std::hypot(v_x, v_y);
  double theta = speed > 0.5 ? std::atan2(v_y, v_x) : 0.0;
  geom::ParallelogramState s;
  s.l = kDefaultWidth;
  s.w = kDefaultWidth;
  s.theta = theta;
  s.theta_star = M_PI / 2.0;
  s.v_x = v_x;
  s.v_y = v_y;
  geom::Point2 u{std::cos(theta), std::sin(theta)};
  geom::Point2 n = rot90(u);
  s.rf_x = c.x - 0.5 * s.l * u.x - 0.5 * s.w * n.x;
  s.rf_y = c.y - 0.5 * s.l * u.y - 0.5 * s.w * n.y;
  return s;
}

}  // namespace

FusedLabel fuse_tracks(const std::vector<SensorTrack> & tracks) {
  if (tracks.empty()) throw EmptyInput("no tracks to fuse");
  double t_min = tracks[0].timestamp, t_max = tracks[0].timestamp;
  for (const auto & t : tracks) {
    t.validate();
    t_min = std::min(t_min, t.timestamp);
    t_max = std::max(t_max, t.timestamp);
  }
  if (t_max - t_min > kFusionSlot + 1e-9) {
    throw InvalidGeometry("tracks span more than one 20 ms fusion slot");
  }

  // canonical processing order: anchor first, then descending confidence
  std::vector<const SensorTrack *> order;
  order.reserve(tracks.size());
  for (const auto & t : tracks) order.push_back(&t);
  std::sort(order.begin(), order.end(), [](const SensorTrack * a, const SensorTrack * b) {
    size_t na = a->shape.extension_points.size(), nb = b->shape.extension_points.size();
    if (na != nb) return na > nb;
    double wa = track_weight_sum(*a), wb = track_weight_sum(*b);
    if (wa != wb) return wa > wb;
    if (a->sensor_id != b->sensor_id) return a->sensor_id < b->sensor_id;
    return a->timestamp < b->timestamp;
  });
  const SensorTrack & anchor = *order[0];

  std::vector<WorkingPoint> points;
  for (size_t i = 0; i < anchor.shape.extension_points.size(); ++i) {
    points.push_back({anchor.shape.extension_points[i], anchor.shape.point_covariances[i]});
  }
  const int corner_index = points.size() == 3 ? 1 : 0;

  std::set<SensorId> contributing{anchor.sensor_id};
  std::vector<const SensorTrack *> fused_tracks{&anchor};

  auto anchor_segments = [&]() {
    std::vector<std::pair<int, int>> segs;
    for (size_t i = 0; i + 1 < points.size(); ++i) segs.emplace_back(static_cast<int>(i), static_cast<int>(i + 1));
    return segs;
  }();

  for (size_t oi = 1; oi < order.size(); ++oi) {
    const SensorTrack & trk = *order[oi];
    bool used = false;
    if (trk.shape.kind == geom::ShapeKind::POINT) {
      // points only sharpen the corner estimate
      int target = corner_index;
      if (points.size() == 2) {
        double d0 = geom::norm(trk.shape.extension_points[0] - points[0].p);
        double d1 = geom::norm(trk.shape.extension_points[0] - points[1].p);
        target = d0 <= d1 ? 0 : 1;
      }
      if (geom::norm(trk.shape.extension_points[0] - points[target].p) < kHausdorffGate) {
        ci_update(points[target], trk.shape.extension_points[0], trk.shape.point_covariances[0]);
        used = true;
      }
    } else if (!anchor_segments.empty()) {
      auto segs = trk.shape.segments();
      for (size_t si = 0; si < segs.size(); ++si) {
        // best associable anchor segment for this track segment
        int best = -1;
        double best_h = std::numeric_limits<double>::infinity();
        for (size_t ai = 0; ai < anchor_segments.size(); ++ai) {
          geom::Segment aseg(points[anchor_segments[ai].first].p, points[anchor_segments[ai].second].p);
          auto dec = associate(aseg, segs[si]);
          if (dec.associated && dec.hausdorff < best_h) {
            best_h = dec.hausdorff;
            best = static_cast<int>(ai);
          }
        }
        if (best < 0) continue;
        auto [ia, ib] = anchor_segments[best];
        const geom::Point2 & ta = trk.shape.extension_points[si];
        const geom::Point2 & tb = trk.shape.extension_points[si + 1];
        const Eigen::Matrix2d & ca = trk.shape.point_covariances[si];
        const Eigen::Matrix2d & cb = trk.shape.point_covariances[si + 1];
        // endpoint pairing that minimizes total displacement
        double straight = geom::norm(ta - points[ia].p) + geom::norm(tb - points[ib].p);
        double crossed = geom::norm(ta - points[ib].p) + geom::norm(tb - points[ia].p);
        if (straight <= crossed) {
          ci_update(points[ia], ta, ca);
          ci_update(points[ib], tb, cb);
        } else {
          ci_update(points[ia], tb, cb);
          ci_update(points[ib], ta, ca);
        }
        used = true;
      }
    }
    if (used) {
      contributing.insert(trk.sensor_id);
      fused_tracks.push_back(&trk);
    }
  }

  // confidence-weighted velocity over contributing tracks
  double wsum = 0.0, vx = 0.0, vy = 0.0;
  for (const SensorTrack * t : fused_tracks) {
    double w = track_weight_sum(*t);
    wsum += w;
    vx += w * t->state(2);
    vy += w * t->state(3);
  }
  vx /= wsum;
  vy /= wsum;

  FusedLabel label;
  if (points.size() == 3) {
    geom::complete_parallelogram(points[0].p, points[1].p, points[2].p);  // collinearity gate
    label.state = geom::points_to_state(points[0].p, points[1].p, points[2].p, vx, vy);
  } else if (points.size() == 2) {
    label.state = state_from_i(points[0].p, points[1].p, vx, vy);
  } else {
    label.state = state_from_point(points[0].p, vx, vy);
  }
  for (const auto & wp : points) label.endpoint_covs.push_back(wp.cov);
  label.contributing_sensors = std::move(contributing);
  return label;
}

}  // namespace leo::fusion
