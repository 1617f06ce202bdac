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

#include "leo/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "leo/rng.hpp"

namespace leo::geom {

namespace {

constexpr double kCovFloor = 1e-4;  // m^2, keeps reported covariances invertible

bool finite(double v) { return std::isfinite(v); }

Eigen::Matrix2d iso_cov(double var) {
  Eigen::Matrix2d c = Eigen::Matrix2d::Identity() * std::max(var, kCovFloor);
  return c;
}

}  // namespace

double wrap_angle(double a) {
  double r = std::fmod(a + M_PI, 2.0 * M_PI);
  if (r <= 0.0) r += 2.0 * M_PI;
  return r - M_PI;
}

double wrap_angle_half(double a) {
  double r = std::fmod(a, M_PI);
  if (r <= 0.0) r += M_PI;
  return r;
}

void ParallelogramState::validate() const {
  for (double v : to_array()) {
    if (!finite(v)) throw InvalidGeometry("non-finite parallelogram state");
  }
  if (l <= 0.0 || w <= 0.0) throw InvalidGeometry("non-positive extent");
  if (theta <= -M_PI - 1e-12 || theta > M_PI + 1e-12) throw InvalidGeometry("theta outside (-pi, pi]");
  if (theta_star <= 0.0 || theta_star >= M_PI) throw InvalidGeometry("theta_star outside (0, pi)");
}

void ShapePrimitive::validate() const {
  size_t expected = kind == ShapeKind::L_SHAPE ? 3 : kind == ShapeKind::I_SHAPE ? 2 : 1;
  if (extension_points.size() != expected) {
    throw InvalidGeometry("extension point count does not match shape kind");
  }
  if (point_covariances.size() != extension_points.size()) {
    throw InvalidGeometry("covariance count does not match extension points");
  }
  for (const auto & p : extension_points) {
    if (!finite(p.x) || !finite(p.y)) throw InvalidGeometry("non-finite extension point");
  }
  for (const auto & c : point_covariances) {
    if (std::abs(c(0, 1) - c(1, 0)) > 1e-9 * (1.0 + std::abs(c(0, 1)))) {
      throw InvalidGeometry("covariance not symmetric");
    }
    if (c(0, 0) <= 0.0 || c.determinant() <= 0.0) {
      throw InvalidGeometry("covariance not positive definite");
    }
  }
}

std::vector<Segment> ShapePrimitive::segments() const {
  std::vector<Segment> out;
  for (size_t i = 0; i + 1 < extension_points.size(); ++i) {
    out.emplace_back(extension_points[i], extension_points[i + 1]);
  }
  return out;
}

ConvexPolygon ConvexPolygon::from_ccw(std::vector<Point2> vertices) {
  size_t n = vertices.size();
  if (n < 3) throw InvalidGeometry("polygon needs at least 3 vertices");
  for (const auto & v : vertices) {
    if (!finite(v.x) || !finite(v.y)) throw InvalidGeometry("non-finite vertex");
  }
  double area = signed_area(vertices);
  if (area <= 0.0) throw InvalidGeometry("vertices not in CCW order");
  for (size_t i = 0; i < n; ++i) {
    Point2 e1 = vertices[(i + 1) % n] - vertices[i];
    Point2 e2 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
    if (cross(e1, e2) <= -1e-12) throw InvalidGeometry("polygon not convex");
  }
  return ConvexPolygon(std::move(vertices));
}

double ConvexPolygon::area() const { return signed_area(vertices_); }

Point2 ConvexPolygon::centroid() const {
  Point2 c{0.0, 0.0};
  for (const auto & v : vertices_) c = c + v;
  double inv = 1.0 / static_cast<double>(vertices_.size());
  return {inv * c.x, inv * c.y};
}

ConvexPolygon complete_parallelogram(const Point2 & p1, const Point2 & p2, const Point2 & p3) {
  double tri_area = 0.5 * std::abs(cross(p2 - p1, p3 - p1));
  if (tri_area < kCollinearAreaFloor) {
    throw CollinearPoints("triangle area below 1e-9 m^2");
  }
  Point2 p4 = (p1 + p3) - p2;
  std::vector<Point2> ring{p1, p2, p3, p4};
  if (signed_area(ring) < 0.0) std::reverse(ring.begin(), ring.end());
  return ConvexPolygon::from_ccw(std::move(ring));
}

ConvexPolygon state_to_polygon(const ParallelogramState & s) {
  s.validate();
  auto v = parallelogram_vertices<double>(s.rf_x, s.rf_y, s.l, s.w, s.theta, s.theta_star);
  return ConvexPolygon::from_ccw({v[0], v[1], v[2], v[3]});
}

ParallelogramState polygon_to_state(const ConvexPolygon & p, double v_x, double v_y) {
  const auto & v = p.vertices();
  if (v.size() != 4) throw InvalidGeometry("expected a 4-vertex parallelogram");
  Point2 gap = (v[0] + v[2]) - (v[1] + v[3]);
  if (norm(gap) > 1e-6) throw InvalidGeometry("vertices do not close a parallelogram");
  Point2 le = v[1] - v[0];
  Point2 we = v[3] - v[0];
  ParallelogramState s;
  s.rf_x = v[0].x;
  s.rf_y = v[0].y;
  s.l = norm(le);
  s.w = norm(we);
  s.theta = std::atan2(le.y, le.x);
  s.theta_star = wrap_angle(std::atan2(we.y, we.x) - s.theta);
  s.v_x = v_x;
  s.v_y = v_y;
  s.validate();
  return s;
}

ParallelogramState points_to_state(const Point2 & rear, const Point2 & corner, const Point2 & front,
                                   double v_x, double v_y) {
  double tri_area = 0.5 * std::abs(cross(corner - rear, front - rear));
  if (tri_area < kCollinearAreaFloor) {
    throw CollinearPoints("extension points nearly collinear");
  }
  Point2 le = front - corner;
  Point2 we = rear - corner;
  ParallelogramState s;
  s.l = norm(le);
  s.w = norm(we);
  s.theta = std::atan2(le.y, le.x);
  double ts = wrap_angle(std::atan2(we.y, we.x) - s.theta);
  if (ts > 0.0) {
    s.rf_x = corner.x;
    s.rf_y = corner.y;
    s.theta_star = ts;
  } else {
    // reference moves to the rear endpoint so theta_star lands in (0, pi)
    s.rf_x = rear.x;
    s.rf_y = rear.y;
    s.theta_star = ts + M_PI;
  }
  s.v_x = v_x;
  s.v_y = v_y;
  s.validate();
  return s;
}

double polygon_intersection_area(const ConvexPolygon & a, const ConvexPolygon & b) {
  return intersection_area_impl(a.vertices(), b.vertices());
}

namespace {

OverlapMetrics<double> checked_overlap(const ConvexPolygon & a, const ConvexPolygon & b) {
  if (a.area() + b.area() < kDegenerateAreaFloor) {
    throw DegenerateArea("combined polygon area below 1e-12");
  }
  return overlap_metrics_impl(a.vertices(), b.vertices());
}

}  // namespace

double iou(const ConvexPolygon & a, const ConvexPolygon & b) { return checked_overlap(a, b).iou; }
double giou(const ConvexPolygon & a, const ConvexPolygon & b) { return checked_overlap(a, b).giou; }
double diou(const ConvexPolygon & a, const ConvexPolygon & b) { return checked_overlap(a, b).diou; }

double point_segment_distance(const Point2 & p, const Segment & s) {
  Point2 d = s.b - s.a;
  double t = dot(p - s.a, d) / dot(d, d);
  t = std::clamp(t, 0.0, 1.0);
  Point2 q = s.a + Point2{t * d.x, t * d.y};
  return norm(p - q);
}

double hausdorff_segments(const Segment & s1, const Segment & s2) {
  // The directed segment-to-segment supremum is attained at an endpoint, so
  // four point-to-segment distances are exact.
  double d12 = std::max(point_segment_distance(s1.a, s2), point_segment_distance(s1.b, s2));
  double d21 = std::max(point_segment_distance(s2.a, s1), point_segment_distance(s2.b, s1));
  return std::max(d12, d21);
}

double acute_angle(const Segment & s1, const Segment & s2) {
  Point2 d1 = s1.direction();
  Point2 d2 = s2.direction();
  double c = std::abs(dot(d1, d2)) / (norm(d1) * norm(d2));
  return std::acos(std::clamp(c, 0.0, 1.0));
}

namespace {

struct Line {
  Point2 point;  // a point on the line
  Point2 dir;    // unit direction
};

double line_distance(const Line & ln, const Point2 & p) { return std::abs(cross(ln.dir, p - ln.point)); }

// Total-least-squares line through a point set (principal axis).
Line tls_line(const std::vector<Point2> & pts) {
  Point2 mean{0.0, 0.0};
  for (const auto & p : pts) mean = mean + p;
  double inv = 1.0 / static_cast<double>(pts.size());
  mean = {inv * mean.x, inv * mean.y};
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto & p : pts) {
    Eigen::Vector2d d(p.x - mean.x, p.y - mean.y);
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  Eigen::Vector2d dir = es.eigenvectors().col(1);  // largest eigenvalue
  return {mean, {dir.x(), dir.y()}};
}

std::vector<int> line_inliers(const Line & ln, const std::vector<Point2> & pts, const std::vector<int> & idx,
                              double tol) {
  std::vector<int> in;
  for (int i : idx) {
    if (line_distance(ln, pts[i]) <= tol) in.push_back(i);
  }
  return in;
}

// One RANSAC line over the subset `idx` of pts; returns inliers of the
// TLS-refit line (empty when no sample yields >= 2 inliers).
std::vector<int> ransac_line(const std::vector<Point2> & pts, const std::vector<int> & idx, int iterations,
                             double tol, Rng & rng) {
  if (idx.size() < 2) return {};
  std::vector<int> best;
  for (int it = 0; it < iterations; ++it) {
    int i = idx[rng.below(idx.size())];
    int j = idx[rng.below(idx.size())];
    if (i == j) continue;
    Point2 d = pts[j] - pts[i];
    double len = norm(d);
    if (len < kMinSegmentLength) continue;
    Line ln{pts[i], {d.x / len, d.y / len}};
    auto in = line_inliers(ln, pts, idx, tol);
    if (in.size() > best.size()) best = std::move(in);
  }
  if (best.size() < 2) return best;
  std::vector<Point2> sel;
  sel.reserve(best.size());
  for (int i : best) sel.push_back(pts[i]);
  return line_inliers(tls_line(sel), pts, idx, tol);
}

double residual_variance(const Line & ln, const std::vector<Point2> & pts, const std::vector<int> & idx) {
  double acc = 0.0;
  for (int i : idx) {
    double d = line_distance(ln, pts[i]);
    acc += d * d;
  }
  return idx.empty() ? 0.0 : acc / static_cast<double>(idx.size());
}

ShapePrimitive make_point_primitive(const std::vector<Point2> & pts) {
  Point2 c{0.0, 0.0};
  for (const auto & p : pts) c = c + p;
  double inv = 1.0 / static_cast<double>(pts.size());
  c = {inv * c.x, inv * c.y};
  double var = 0.0;
  for (const auto & p : pts) var += dot(p - c, p - c);
  var = pts.empty() ? 0.0 : var / (2.0 * static_cast<double>(pts.size()));
  ShapePrimitive prim;
  prim.kind = ShapeKind::POINT;
  prim.extension_points = {c};
  prim.point_covariances = {iso_cov(var)};
  return prim;
}

ShapePrimitive make_i_primitive(const std::vector<Point2> & pts, const std::vector<int> & inliers,
                                const Line & ln) {
  double tmin = std::numeric_limits<double>::infinity();
  double tmax = -std::numeric_limits<double>::infinity();
  for (int i : inliers) {
    double t = dot(pts[i] - ln.point, ln.dir);
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
  }
  Point2 a = ln.point + Point2{tmin * ln.dir.x, tmin * ln.dir.y};
  Point2 b = ln.point + Point2{tmax * ln.dir.x, tmax * ln.dir.y};
  if (a.x > b.x || (a.x == b.x && a.y > b.y)) std::swap(a, b);
  double var = residual_variance(ln, pts, inliers);
  ShapePrimitive prim;
  prim.kind = ShapeKind::I_SHAPE;
  prim.extension_points = {a, b};
  prim.point_covariances = {iso_cov(var), iso_cov(var)};
  return prim;
}

}  // namespace

ShapePrimitive fit_l_shape_ransac(const std::vector<Point2> & contour, int iterations, double inlier_tol,
                                  uint64_t seed) {
  if (contour.size() < 6) {
    if (contour.empty()) throw InvalidGeometry("empty contour");
    return make_point_primitive(contour);
  }
  Rng rng(seed * 0x9e3779b97f4a7c15ULL + 1);

  std::vector<int> all(contour.size());
  std::iota(all.begin(), all.end(), 0);

  auto in1 = ransac_line(contour, all, iterations, inlier_tol, rng);
  if (in1.size() < 2) return make_point_primitive(contour);
  std::vector<Point2> sel1;
  for (int i : in1) sel1.push_back(contour[i]);
  Line l1 = tls_line(sel1);

  std::vector<int> rest;
  for (int i : all) {
    if (line_distance(l1, contour[i]) > inlier_tol) rest.push_back(i);
  }
  auto in2 = ransac_line(contour, rest, iterations, inlier_tol, rng);
  if (in2.size() < 3) return make_i_primitive(contour, in1, l1);
  std::vector<Point2> sel2;
  for (int i : in2) sel2.push_back(contour[i]);
  Line l2 = tls_line(sel2);

  double denom = cross(l2.dir, l1.dir);
  if (std::abs(denom) < 1e-9) return make_i_primitive(contour, in1, l1);
  double t = cross(l2.dir, l2.point - l1.point) / denom;
  Point2 corner = l1.point + Point2{t * l1.dir.x, t * l1.dir.y};

  auto far_end = [&](const Line & ln, const std::vector<int> & inliers) {
    double best = 0.0;
    for (int i : inliers) {
      double ti = dot(contour[i] - corner, ln.dir);
      if (std::abs(ti) > std::abs(best)) best = ti;
    }
    return corner + Point2{best * ln.dir.x, best * ln.dir.y};
  };
  Point2 end1 = far_end(l1, in1);
  Point2 end2 = far_end(l2, in2);
  // ordering convention: rear endpoint (smaller longitudinal coordinate) first
  if (end1.x > end2.x || (end1.x == end2.x && end1.y > end2.y)) std::swap(end1, end2);

  double var = std::max(residual_variance(l1, contour, in1), residual_variance(l2, contour, in2));
  ShapePrimitive prim;
  prim.kind = ShapeKind::L_SHAPE;
  prim.extension_points = {end1, corner, end2};
  prim.point_covariances = {iso_cov(var), iso_cov(var), iso_cov(var)};
  return prim;
}

std::pair<Point2, Point2> closest_farthest_corners(const ConvexPolygon & p) {
  const auto & v = p.vertices();
  size_t ic = 0, isf = 0;
  double dc = dot(v[0], v[0]);
  double df = dc;
  for (size_t i = 1; i < v.size(); ++i) {
    double d = dot(v[i], v[i]);
    if (d < dc) {
      dc = d;
      ic = i;
    }
    if (d > df) {
      df = d;
      isf = i;
    }
  }
  return {v[ic], v[isf]};
}

}  // namespace leo::geom
