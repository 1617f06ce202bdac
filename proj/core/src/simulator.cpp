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

#include "leo/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace leo::sim {

namespace {

constexpr double kCovFloor = 1e-4;       // m^2
constexpr double kSigmaRefRange = 10.0;  // sigma0 applies at this range

}  // namespace

const char * scenario_kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::HIGHWAY_FOLLOW: return "HIGHWAY_FOLLOW";
    case ScenarioKind::CUT_IN: return "CUT_IN";
    case ScenarioKind::OCCLUSION: return "OCCLUSION";
    case ScenarioKind::ARTICULATED: return "ARTICULATED";
  }
  return "HIGHWAY_FOLLOW";
}

ScenarioKind scenario_kind_from_name(const std::string & name) {
  for (auto k : {ScenarioKind::HIGHWAY_FOLLOW, ScenarioKind::CUT_IN, ScenarioKind::OCCLUSION,
                 ScenarioKind::ARTICULATED}) {
    if (name == scenario_kind_name(k)) return k;
  }
  throw InvalidConfig("unknown scenario kind '" + name + "'");
}

const char * lane_name(Lane l) {
  switch (l) {
    case Lane::EL: return "EL";
    case Lane::LL: return "LL";
    case Lane::RL: return "RL";
    case Lane::OTHER: return "OTHER";
  }
  return "OTHER";
}

Lane lane_from_name(const std::string & name) {
  for (auto l : {Lane::EL, Lane::LL, Lane::RL, Lane::OTHER}) {
    if (name == lane_name(l)) return l;
  }
  throw SchemaMismatch("unknown lane '" + name + "'");
}

Lane lane_from_lateral(double y) {
  if (y >= -1.5 && y <= 1.5) return Lane::EL;
  if (y > 1.5 && y <= 4.5) return Lane::LL;
  if (y >= -4.5 && y < -1.5) return Lane::RL;
  return Lane::OTHER;
}

void ScenarioConfig::validate() const {
  if (!(duration > 0.12)) throw InvalidConfig("duration must exceed 0.12 s");
  if (target_length < 3.0 || target_length > 75.0) throw InvalidConfig("target_length outside [3, 75] m");
  if (target_width <= 0.0 || target_width > 4.0) throw InvalidConfig("target_width outside (0, 4] m");
  if (sensor_dropout_prob < 0.0 || sensor_dropout_prob > 1.0) throw InvalidConfig("dropout prob outside [0,1]");
  if (noise_scale < 0.0) throw InvalidConfig("negative noise_scale");
}

const std::vector<SensorModel> & sensor_models() {
  using fusion::SensorId;
  auto deg = [](double d) { return d * M_PI / 180.0; };
  static const std::vector<SensorModel> models = {
      // id, rate, fov, boresight, max_range, point_range, sigma0, radial, tangential, sigma_v, high_res, penetrates
      {SensorId::LRL, 40.0, deg(120), 0.0, 150.0, 1e9, 0.05, 1.0, 1.0, 0.30, true, false},
      {SensorId::LRR, 60.0, deg(60), 0.0, 250.0, 80.0, 0.30, 0.5, 2.0, 0.10, false, true},
      {SensorId::MMRFR, 60.0, deg(60), -deg(35), 90.0, 60.0, 0.35, 0.5, 2.0, 0.15, false, true},
      {SensorId::MMRFL, 60.0, deg(60), deg(35), 90.0, 60.0, 0.35, 0.5, 2.0, 0.15, false, true},
      {SensorId::MPC, 80.0, deg(90), 0.0, 120.0, 1e9, 0.15, 2.0, 0.7, 0.50, false, false},
      {SensorId::LIDAR_CONTOUR, 40.0, deg(120), 0.0, 100.0, 1e9, 0.04, 1.0, 1.2, 0.35, true, false},
      {SensorId::SMPC, 80.0, deg(90), 0.0, 40.0, 1e9, 0.10, 1.5, 0.8, 0.40, true, false},
  };
  return models;
}

namespace {

const SensorModel & model_for(fusion::SensorId id) {
  for (const auto & m : sensor_models()) {
    if (m.id == id) return m;
  }
  throw InvalidConfig("no model for sensor");
}

bool segments_intersect(const geom::Point2 & a, const geom::Point2 & b, const geom::Point2 & c,
                        const geom::Point2 & d) {
  auto orient = [](const geom::Point2 & p, const geom::Point2 & q, const geom::Point2 & r) {
    double v = geom::cross(q - p, r - p);
    return v > 1e-12 ? 1 : (v < -1e-12 ? -1 : 0);
  };
  int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

// Line of sight from the origin to p, blocked by the occluder polygon.
bool ray_blocked(const geom::Point2 & p, const geom::ConvexPolygon & occ) {
  const auto & v = occ.vertices();
  geom::Point2 origin{0.0, 0.0};
  for (size_t i = 0; i < v.size(); ++i) {
    if (segments_intersect(origin, p, v[i], v[(i + 1) % v.size()])) return true;
  }
  return false;
}

Eigen::Matrix2d range_covariance(const SensorModel & m, const geom::Point2 & p, double noise_scale) {
  double r = std::max(geom::norm(p), 1.0);
  double sigma = m.sigma0 * (r / kSigmaRefRange) * noise_scale;
  double phi = std::atan2(p.y, p.x);
  Eigen::Matrix2d rotm;
  rotm << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  Eigen::Matrix2d diag = Eigen::Matrix2d::Zero();
  diag(0, 0) = std::pow(m.radial_scale * sigma, 2);
  diag(1, 1) = std::pow(m.tangential_scale * sigma, 2);
  return rotm * diag * rotm.transpose();
}

geom::Point2 sample_noise(const Eigen::Matrix2d & cov, Rng & rng) {
  Eigen::Vector2d g(rng.gaussian(), rng.gaussian());
  if (cov.trace() < 1e-18) return {0.0, 0.0};  // noise-free configuration
  Eigen::LLT<Eigen::Matrix2d> llt(cov + 1e-15 * cov.trace() * Eigen::Matrix2d::Identity());
  Eigen::Vector2d n = llt.matrixL() * g;
  return {n.x(), n.y()};
}

}  // namespace

std::optional<fusion::SensorTrack> sense_target(const geom::ParallelogramState & truth,
                                                fusion::SensorId sensor_id, const EgoState & ego, Rng & rng,
                                                double timestamp,
                                                const std::optional<geom::ConvexPolygon> & occluder,
                                                double dropout_prob, double noise_scale) {
  (void)ego;  // mounting is ego-rigid; ego state only matters to the caller's frame transform
  const SensorModel & m = model_for(sensor_id);
  geom::ConvexPolygon poly = geom::state_to_polygon(truth);
  geom::Point2 c = poly.centroid();
  double range = geom::norm(c);
  if (range > m.max_range || range < 1.0) return std::nullopt;
  double bearing = std::atan2(c.y, c.x);
  if (std::abs(geom::wrap_angle(bearing - m.boresight)) > 0.5 * m.fov) return std::nullopt;
  if (dropout_prob > 0.0 && rng.uniform() < dropout_prob) return std::nullopt;

  const auto & v = poly.vertices();
  const size_t n = v.size();

  // edges whose outward normal faces the ego origin
  std::vector<int> visible;
  for (size_t i = 0; i < n; ++i) {
    geom::Point2 dir = v[(i + 1) % n] - v[i];
    geom::Point2 outward{dir.y, -dir.x};
    geom::Point2 mid{0.5 * (v[i].x + v[(i + 1) % n].x), 0.5 * (v[i].y + v[(i + 1) % n].y)};
    if (geom::dot(outward, geom::Point2{-mid.x, -mid.y}) > 1e-9) visible.push_back(static_cast<int>(i));
  }
  if (occluder && !m.penetrates) {
    std::vector<int> clear;
    for (int e : visible) {
      geom::Point2 a = v[e], b = v[(e + 1) % n];
      geom::Point2 mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
      if (!ray_blocked(a, *occluder) && !ray_blocked(b, *occluder) && !ray_blocked(mid, *occluder)) {
        clear.push_back(e);
      }
    }
    visible = std::move(clear);
  }
  if (visible.empty()) return std::nullopt;

  // pick an adjacent pair (for an L) or a single edge (for an I)
  auto adjacent = [&](int a, int b) { return (a + 1) % static_cast<int>(n) == b; };
  int edge_a = -1, edge_b = -1;
  if (visible.size() >= 2) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < visible.size(); ++i) {
      for (size_t j = 0; j < visible.size(); ++j) {
        if (!adjacent(visible[i], visible[j])) continue;
        int shared = visible[j];  // vertex shared by edges i and j
        double d = geom::norm(v[shared]);
        if (d < best) {
          best = d;
          edge_a = visible[i];
          edge_b = visible[j];
        }
      }
    }
  }

  geom::ShapePrimitive shape;
  bool want_point = !m.high_res && range > m.point_range;
  if (want_point) {
    shape.kind = geom::ShapeKind::POINT;
    shape.extension_points = {c};
  } else if (m.high_res && edge_a >= 0) {
    int corner = edge_b;  // shared vertex index
    geom::Point2 end1 = v[edge_a];
    geom::Point2 end2 = v[(edge_b + 1) % n];
    if (end1.x > end2.x || (end1.x == end2.x && end1.y > end2.y)) std::swap(end1, end2);
    shape.kind = geom::ShapeKind::L_SHAPE;
    shape.extension_points = {end1, v[corner], end2};
  } else {
    // nearest visible edge
    int best_e = visible[0];
    double best_d = std::numeric_limits<double>::infinity();
    for (int e : visible) {
      geom::Point2 mid{0.5 * (v[e].x + v[(e + 1) % n].x), 0.5 * (v[e].y + v[(e + 1) % n].y)};
      double d = geom::norm(mid);
      if (d < best_d) {
        best_d = d;
        best_e = e;
      }
    }
    geom::Point2 a = v[best_e], b = v[(best_e + 1) % n];
    if (a.x > b.x || (a.x == b.x && a.y > b.y)) std::swap(a, b);
    shape.kind = geom::ShapeKind::I_SHAPE;
    shape.extension_points = {a, b};
  }

  // honest range-dependent noise: samples are drawn from the covariance that
  // is reported (plus an invertibility floor)
  double mean_var = 0.0;
  for (auto & p : shape.extension_points) {
    Eigen::Matrix2d cov = range_covariance(m, p, noise_scale);
    geom::Point2 delta = sample_noise(cov, rng);
    p = p + delta;
    Eigen::Matrix2d reported = cov + kCovFloor * Eigen::Matrix2d::Identity();
    shape.point_covariances.push_back(reported);
    mean_var += 0.5 * (reported(0, 0) + reported(1, 1));
  }
  mean_var /= static_cast<double>(shape.extension_points.size());

  double sv = m.sigma_v * noise_scale;
  double vx = truth.v_x + sv * rng.gaussian();
  double vy = truth.v_y + sv * rng.gaussian();

  fusion::SensorTrack trk;
  trk.sensor_id = sensor_id;
  trk.object_id = 1;
  trk.timestamp = timestamp;
  geom::Point2 obs_c{0.0, 0.0};
  for (const auto & p : shape.extension_points) obs_c = obs_c + p;
  double inv = 1.0 / static_cast<double>(shape.extension_points.size());
  trk.state << inv * obs_c.x, inv * obs_c.y, vx, vy;
  trk.state_cov = Eigen::Matrix4d::Identity();
  trk.state_cov(0, 0) = trk.state_cov(1, 1) = mean_var;
  trk.state_cov(2, 2) = trk.state_cov(3, 3) = sv * sv + kCovFloor;
  trk.shape = std::move(shape);
  return trk;
}

namespace {

struct EgoTraj {
  double v0;
  ScenarioKind kind;
  double duration;

  double accel(double t) const {
    switch (kind) {
      case ScenarioKind::CUT_IN:
        return (t > 0.4 * duration && t < 0.6 * duration) ? -1.2 : 0.0;
      case ScenarioKind::OCCLUSION:
        return 0.4 * std::sin(2.0 * M_PI * t / 5.0);
      default:
        return 0.0;
    }
  }
  double speed(double t) const {
    // piecewise-analytic integral of accel()
    switch (kind) {
      case ScenarioKind::CUT_IN: {
        double t1 = 0.4 * duration, t2 = 0.6 * duration;
        if (t <= t1) return v0;
        if (t < t2) return v0 - 1.2 * (t - t1);
        return v0 - 1.2 * (t2 - t1);
      }
      case ScenarioKind::OCCLUSION: {
        double w = 2.0 * M_PI / 5.0;
        return v0 + 0.4 / w * (1.0 - std::cos(w * t));
      }
      default:
        return v0;
    }
  }
  double position(double t) const {
    switch (kind) {
      case ScenarioKind::CUT_IN: {
        double t1 = 0.4 * duration, t2 = 0.6 * duration;
        if (t <= t1) return v0 * t;
        double x1 = v0 * t1;
        if (t < t2) return x1 + v0 * (t - t1) - 0.6 * (t - t1) * (t - t1);
        double x2 = x1 + v0 * (t2 - t1) - 0.6 * (t2 - t1) * (t2 - t1);
        return x2 + speed(t2) * (t - t2);
      }
      case ScenarioKind::OCCLUSION: {
        double w = 2.0 * M_PI / 5.0;
        return v0 * t + 0.4 / w * (t - std::sin(w * t) / w);
      }
      default:
        return v0 * t;
    }
  }
  EgoState state(double t) const { return {speed(t), 0.0, accel(t), t}; }
};

struct TargetTraj {
  ScenarioKind kind;
  double duration;
  double l, w;
  double gap0;       // initial longitudinal centroid offset ahead of ego
  double closure;    // m/s relative drift
  double lane_start; // centroid lateral at t=0
  double hinge_phase;
  const EgoTraj * ego;

  double lateral(double t) const {
    if (kind != ScenarioKind::CUT_IN) return lane_start;
    double t1 = 0.15 * duration, t2 = 0.6 * duration;
    if (t <= t1) return lane_start;
    if (t >= t2) return 0.0;
    return lane_start * 0.5 * (1.0 + std::cos(M_PI * (t - t1) / (t2 - t1)));
  }
  double lateral_rate(double t) const {
    if (kind != ScenarioKind::CUT_IN) return 0.0;
    double t1 = 0.15 * duration, t2 = 0.6 * duration;
    if (t <= t1 || t >= t2) return 0.0;
    return -lane_start * 0.5 * M_PI / (t2 - t1) * std::sin(M_PI * (t - t1) / (t2 - t1));
  }
  double theta_star(double t) const {
    if (kind != ScenarioKind::ARTICULATED) return M_PI / 2.0;
    return M_PI / 2.0 + 0.25 + 0.18 * std::sin(2.0 * M_PI * t / 6.0 + hinge_phase);
  }

  // truth in the ego frame at time t (ego drives straight along +x)
  geom::ParallelogramState state(double t) const {
    double vx = ego->speed(t) + closure;
    double vy = lateral_rate(t);
    double cx = gap0 + closure * t;  // longitudinal centroid offset in the ego frame
    double cy = lateral(t);
    double th = kind == ScenarioKind::CUT_IN ? std::atan2(vy, vx) : 0.0;
    double ts = theta_star(t);
    geom::ParallelogramState s;
    s.l = l;
    s.w = w;
    s.theta = th;
    s.theta_star = ts;
    s.v_x = vx;
    s.v_y = vy;
    // centroid = RF + (l*u + w*q)/2
    double ux = std::cos(th), uy = std::sin(th);
    double qx = std::cos(th + ts), qy = std::sin(th + ts);
    s.rf_x = cx - 0.5 * (l * ux + w * qx);
    s.rf_y = cy - 0.5 * (l * uy + w * qy);
    return s;
  }
};

}  // namespace

std::vector<Frame> generate_scenario(const ScenarioConfig & cfg) {
  cfg.validate();
  Rng master(hash_counter(cfg.seed, 0x5eed, static_cast<uint64_t>(cfg.kind), 0, 0));

  EgoTraj ego{master.uniform(22.0, 33.0), cfg.kind, cfg.duration};

  double half_l = 0.5 * cfg.target_length;
  double gap_lo, gap_hi;
  if (cfg.kind == ScenarioKind::OCCLUSION) {
    gap_lo = std::max(81.0, half_l + 6.0);
    gap_hi = std::min(92.0 - half_l, gap_lo + 8.0);
  } else {
    gap_lo = std::max(14.0, half_l + 5.0);
    gap_hi = std::min(90.0 - half_l, gap_lo + 40.0);
  }
  if (gap_hi < gap_lo) gap_hi = gap_lo;

  TargetTraj target;
  target.kind = cfg.kind;
  target.duration = cfg.duration;
  target.l = cfg.target_length;
  target.w = cfg.target_width;
  target.gap0 = master.uniform(gap_lo, gap_hi);
  target.closure = master.uniform(-1.2, 1.2);
  // keep the relative longitudinal offset inside the sensing corridor
  double drift = target.closure * cfg.duration;
  if (target.gap0 + drift > gap_hi) target.closure = (gap_hi - target.gap0) / cfg.duration;
  if (target.gap0 + drift < gap_lo) target.closure = (gap_lo - target.gap0) / cfg.duration;
  double lane_pick = master.uniform();
  switch (cfg.kind) {
    case ScenarioKind::HIGHWAY_FOLLOW:
      target.closure = 0.0;
      target.lane_start = lane_pick < 0.5 ? 0.0 : (lane_pick < 0.75 ? 3.5 : -3.5);
      break;
    case ScenarioKind::CUT_IN:
      target.lane_start = lane_pick < 0.7 ? 3.5 : -3.5;
      break;
    case ScenarioKind::OCCLUSION:
      target.lane_start = lane_pick < 0.6 ? 0.0 : 3.5;
      break;
    case ScenarioKind::ARTICULATED:
      target.lane_start = lane_pick < 0.5 ? 3.5 : -3.5;
      break;
  }
  target.hinge_phase = master.uniform(0.0, 2.0 * M_PI);
  target.ego = &ego;

  // occluder (OCCLUSION only): car-sized box between ego and target,
  // wobbling laterally so the blockage is intermittent
  double occ_gap = master.uniform(14.0, 20.0);
  double occ_phase = master.uniform(0.0, 2.0 * M_PI);
  auto occluder_at = [&](double t) -> std::optional<geom::ConvexPolygon> {
    if (cfg.kind != ScenarioKind::OCCLUSION) return std::nullopt;
    geom::ParallelogramState s;
    s.l = 4.5;
    s.w = 1.8;
    s.theta = 0.0;
    s.theta_star = M_PI / 2.0;
    double cy = target.lane_start + 1.0 * std::sin(2.0 * M_PI * t / 3.0 + occ_phase);
    s.rf_x = occ_gap - 0.5 * s.l;
    s.rf_y = cy - 0.5 * s.w;
    return geom::state_to_polygon(s);
  };

  int frame_count = static_cast<int>(std::floor(cfg.duration / kFrameInterval + 1e-9));
  std::vector<Frame> frames(frame_count);
  for (int k = 0; k < frame_count; ++k) {
    double ts = (k + 1) * kFrameInterval;
    frames[k].fusion_timestamp = ts;
    frames[k].scenario_id = cfg.scenario_id;
    frames[k].ego = ego.state(ts);
    frames[k].truth = target.state(ts);
    geom::Point2 centroid = geom::state_to_polygon(frames[k].truth).centroid();
    frames[k].lane = lane_from_lateral(centroid.y);
  }

  // native-rate sensing, slotted onto the 20 ms grid
  for (const auto & m : sensor_models()) {
    Rng rng(hash_counter(cfg.seed, 0xab5e, static_cast<uint64_t>(m.id), 0, 1));
    double phase = rng.uniform(1e-4, 1.0 / m.rate_hz);
    for (int i = 0;; ++i) {
      double t = phase + i / m.rate_hz;
      if (t > cfg.duration) break;
      int slot = static_cast<int>(std::ceil(t / kFrameInterval - 1e-12)) - 1;
      if (slot < 0 || slot >= frame_count) continue;
      auto trk = sense_target(target.state(t), m.id, ego.state(t), rng, t, occluder_at(t),
                              cfg.sensor_dropout_prob, cfg.noise_scale);
      if (trk) frames[slot].tracks.push_back(std::move(*trk));
    }
  }
  return frames;
}

}  // namespace leo::sim
