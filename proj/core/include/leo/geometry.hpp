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

#ifndef LEO_GEOMETRY_HPP_
#define LEO_GEOMETRY_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "leo/errors.hpp"

namespace leo::geom {

// ---------------------------------------------------------------------------
// Scalar-generic core.
//
// The algorithms below (clipping, shoelace, hulls, IoU variants) are written
// over a generic scalar S so one implementation serves two callers: S=double
// for tracking/fusion/evaluation, and S=nn::Sc (reverse-mode scalar) for the
// differentiable geometry loss. Branching decisions always go through
// value_of(), so with autodiff scalars the control flow is frozen at the
// evaluated point and gradients follow the active branch.
// ---------------------------------------------------------------------------

inline double value_of(double v) { return v; }
// Constant of scalar type S "compatible" with ref (for tape-backed scalars
// the constant lands on ref's tape). ADL hook; this is the double overload.
inline double scalar_like(double /*ref*/, double v) { return v; }

template <class S>
struct Vec2T {
  S x;
  S y;
};

template <class S>
Vec2T<S> operator+(const Vec2T<S> & a, const Vec2T<S> & b) {
  return {a.x + b.x, a.y + b.y};
}
template <class S>
Vec2T<S> operator-(const Vec2T<S> & a, const Vec2T<S> & b) {
  return {a.x - b.x, a.y - b.y};
}
template <class S>
Vec2T<S> operator*(const S & c, const Vec2T<S> & v) {
  return {c * v.x, c * v.y};
}

template <class S>
S dot(const Vec2T<S> & a, const Vec2T<S> & b) {
  return a.x * b.x + a.y * b.y;
}
template <class S>
S cross(const Vec2T<S> & a, const Vec2T<S> & b) {
  return a.x * b.y - a.y * b.x;
}

template <class S>
S norm(const Vec2T<S> & a) {
  using std::sqrt;
  return sqrt(dot(a, a));
}

// Signed area, positive for CCW rings.
template <class S>
S signed_area(const std::vector<Vec2T<S>> & poly) {
  S acc = scalar_like(poly[0].x, 0.0);
  size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    acc = acc + cross(poly[i], poly[(i + 1) % n]);
  }
  return 0.5 * acc;
}

// Sutherland-Hodgman: clip a convex CCW subject against a convex CCW clip
// polygon. Output may contain duplicate/collinear vertices; area routines
// tolerate that.
template <class S>
std::vector<Vec2T<S>> clip_convex(std::vector<Vec2T<S>> subject, const std::vector<Vec2T<S>> & clip) {
  for (size_t e = 0; e < clip.size() && subject.size() >= 3; ++e) {
    const Vec2T<S> & a = clip[e];
    const Vec2T<S> & b = clip[(e + 1) % clip.size()];
    Vec2T<S> dir = b - a;
    std::vector<Vec2T<S>> input = std::move(subject);
    subject.clear();
    size_t n = input.size();
    std::vector<double> side(n);
    for (size_t i = 0; i < n; ++i) side[i] = value_of(cross(dir, input[i] - a));
    for (size_t i = 0; i < n; ++i) {
      size_t j = (i + 1) % n;
      bool in_i = side[i] >= 0.0;
      bool in_j = side[j] >= 0.0;
      if (in_i) subject.push_back(input[i]);
      if (in_i != in_j) {
        S t = cross(dir, a - input[i]) / cross(dir, input[j] - input[i]);
        subject.push_back(input[i] + t * (input[j] - input[i]));
      }
    }
  }
  if (subject.size() < 3) subject.clear();
  return subject;
}

template <class S>
S intersection_area_impl(const std::vector<Vec2T<S>> & a, const std::vector<Vec2T<S>> & b) {
  auto clipped = clip_convex(a, b);
  if (clipped.size() < 3) return scalar_like(a[0].x, 0.0);
  S area = signed_area(clipped);
  if (value_of(area) <= 0.0) return scalar_like(a[0].x, 0.0);
  return area;
}

// Monotone chain hull, CCW. Comparisons run on values; strictly interior and
// collinear points are dropped.
template <class S>
std::vector<Vec2T<S>> convex_hull_impl(std::vector<Vec2T<S>> pts) {
  size_t n = pts.size();
  if (n < 3) return pts;
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](size_t i, size_t j) {
    double xi = value_of(pts[i].x), xj = value_of(pts[j].x);
    if (xi != xj) return xi < xj;
    return value_of(pts[i].y) < value_of(pts[j].y);
  });
  auto turns_right = [&](const Vec2T<S> & o, const Vec2T<S> & p, const Vec2T<S> & q) {
    return value_of(cross(p - o, q - o)) <= 0.0;
  };
  std::vector<Vec2T<S>> hull;
  // lower
  for (size_t k = 0; k < n; ++k) {
    const auto & p = pts[idx[k]];
    while (hull.size() >= 2 && turns_right(hull[hull.size() - 2], hull.back(), p)) hull.pop_back();
    hull.push_back(p);
  }
  // upper
  size_t t = hull.size() + 1;
  for (size_t k = n - 1; k-- > 0;) {
    const auto & p = pts[idx[k]];
    while (hull.size() >= t && turns_right(hull[hull.size() - 2], hull.back(), p)) hull.pop_back();
    hull.push_back(p);
  }
  hull.pop_back();
  return hull;
}

template <class S>
struct OverlapMetrics {
  S iou;
  S giou;
  S diou;
};

// Shared GIoU/DIoU kernel. Both polygons CCW; caller guarantees
// area(a)+area(b) above the degeneracy floor.
template <class S>
OverlapMetrics<S> overlap_metrics_impl(const std::vector<Vec2T<S>> & a, const std::vector<Vec2T<S>> & b) {
  S area_a = signed_area(a);
  S area_b = signed_area(b);
  S inter = intersection_area_impl(a, b);
  S uni = area_a + area_b - inter;
  S iou = inter / uni;

  std::vector<Vec2T<S>> all = a;
  all.insert(all.end(), b.begin(), b.end());
  auto hull = convex_hull_impl(all);
  S hull_area = signed_area(hull);
  S giou = iou - (hull_area - uni) / hull_area;

  auto centroid = [](const std::vector<Vec2T<S>> & p) {
    S cx = p[0].x, cy = p[0].y;
    for (size_t i = 1; i < p.size(); ++i) {
      cx = cx + p[i].x;
      cy = cy + p[i].y;
    }
    double inv = 1.0 / static_cast<double>(p.size());
    return Vec2T<S>{inv * cx, inv * cy};
  };
  Vec2T<S> ca = centroid(a);
  Vec2T<S> cb = centroid(b);
  S d2 = dot(ca - cb, ca - cb);

  // smallest axis-aligned box enclosing both vertex sets
  size_t ix_min = 0, ix_max = 0, iy_min = 0, iy_max = 0;
  for (size_t i = 1; i < all.size(); ++i) {
    if (value_of(all[i].x) < value_of(all[ix_min].x)) ix_min = i;
    if (value_of(all[i].x) > value_of(all[ix_max].x)) ix_max = i;
    if (value_of(all[i].y) < value_of(all[iy_min].y)) iy_min = i;
    if (value_of(all[i].y) > value_of(all[iy_max].y)) iy_max = i;
  }
  S bw = all[ix_max].x - all[ix_min].x;
  S bh = all[iy_max].y - all[iy_min].y;
  S c2 = bw * bw + bh * bh;
  S diou = iou - d2 / c2;
  return {iou, giou, diou};
}

// Parallelogram vertex ring from the 8-parameter state, starting at the
// reference vertex: {RF, RF + l*u(th), RF + l*u(th) + w*u(th+th*), RF + w*u(th+th*)}.
template <class S>
std::array<Vec2T<S>, 4> parallelogram_vertices(const S & rf_x, const S & rf_y, const S & l, const S & w,
                                               const S & theta, const S & theta_star) {
  using std::cos;
  using std::sin;
  S ux = cos(theta), uy = sin(theta);
  S vx = cos(theta + theta_star), vy = sin(theta + theta_star);
  Vec2T<S> rf{rf_x, rf_y};
  Vec2T<S> le{l * ux, l * uy};
  Vec2T<S> we{w * vx, w * vy};
  return {rf, rf + le, rf + le + we, rf + we};
}

// ---------------------------------------------------------------------------
// Double-precision public surface.
// ---------------------------------------------------------------------------

using Point2 = Vec2T<double>;

constexpr double kMinSegmentLength = 1e-6;
constexpr double kCollinearAreaFloor = 1e-9;
constexpr double kDegenerateAreaFloor = 1e-12;

// Wrap into (-pi, pi].
double wrap_angle(double a);
// Wrap into (0, pi] (period pi).
double wrap_angle_half(double a);

struct Segment {
  Point2 a;
  Point2 b;

  Segment(Point2 a_, Point2 b_) : a(a_), b(b_) {
    if (norm(b - a) <= kMinSegmentLength) {
      throw InvalidGeometry("segment endpoints coincide");
    }
  }
  Point2 direction() const { return b - a; }
  double length() const { return norm(b - a); }
};

// Eq.-6 style 8-parameter object state. Angles in radians, theta in
// (-pi, pi], theta_star in (0, pi); theta_star == pi/2 is the box case.
struct ParallelogramState {
  double rf_x = 0.0;
  double rf_y = 0.0;
  double l = 1.0;
  double w = 1.0;
  double theta = 0.0;
  double theta_star = M_PI / 2.0;
  double v_x = 0.0;
  double v_y = 0.0;

  std::array<double, 8> to_array() const { return {rf_x, rf_y, l, w, theta, theta_star, v_x, v_y}; }
  static ParallelogramState from_array(const std::array<double, 8> & a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]};
  }
  void validate() const;
};

enum class ShapeKind : uint8_t { L_SHAPE, I_SHAPE, POINT };

// Sensor-level shape abstraction: 3 ordered extension points for an L
// (rear endpoint, corner, front endpoint), 2 for an I, 1 for a point.
struct ShapePrimitive {
  ShapeKind kind = ShapeKind::POINT;
  std::vector<Point2> extension_points;
  std::vector<Eigen::Matrix2d> point_covariances;

  void validate() const;
  // Segments spanned by consecutive extension points (2 for L, 1 for I, 0 for point).
  std::vector<Segment> segments() const;
};

class ConvexPolygon {
 public:
  // Validates >=3 vertices, CCW order, convexity (consecutive-edge cross
  // products > -1e-12).
  static ConvexPolygon from_ccw(std::vector<Point2> vertices);

  const std::vector<Point2> & vertices() const { return vertices_; }
  size_t size() const { return vertices_.size(); }
  double area() const;
  Point2 centroid() const;

 private:
  explicit ConvexPolygon(std::vector<Point2> v) : vertices_(std::move(v)) {}
  std::vector<Point2> vertices_;
};

// --- operations -------------------------------------------------------------

// Fourth vertex p4 = p1 + p3 - p2; output CCW with p1 first whenever the
// input order is already CCW (otherwise the ring is reversed in place).
ConvexPolygon complete_parallelogram(const Point2 & p1, const Point2 & p2, const Point2 & p3);

ConvexPolygon state_to_polygon(const ParallelogramState & s);

// Inverse of state_to_polygon on its output ordering (vertex 0 is the
// reference vertex). Velocity is not recoverable from geometry and is
// passed through.
ParallelogramState polygon_to_state(const ConvexPolygon & p, double v_x = 0.0, double v_y = 0.0);

// Canonical state from the three ordered extension points of a fused L
// shape. Picks the reference vertex so theta_star lands in (0, pi).
ParallelogramState points_to_state(const Point2 & rear, const Point2 & corner, const Point2 & front,
                                   double v_x = 0.0, double v_y = 0.0);

double polygon_intersection_area(const ConvexPolygon & a, const ConvexPolygon & b);
double iou(const ConvexPolygon & a, const ConvexPolygon & b);
double giou(const ConvexPolygon & a, const ConvexPolygon & b);
double diou(const ConvexPolygon & a, const ConvexPolygon & b);

double point_segment_distance(const Point2 & p, const Segment & s);
double hausdorff_segments(const Segment & s1, const Segment & s2);

// Unsigned acute angle between two segment directions, in [0, pi/2].
double acute_angle(const Segment & s1, const Segment & s2);

// Dual-line RANSAC contour abstraction. Needs >= 6 points for a line pair;
// falls back to an I shape when the second line has fewer than 3 inliers and
// to a point primitive below 6 input points.
ShapePrimitive fit_l_shape_ransac(const std::vector<Point2> & contour, int iterations, double inlier_tol,
                                  uint64_t seed = 0);

// (closest, farthest) corner of the polygon w.r.t. the ego origin; ties go
// to the smaller vertex index.
std::pair<Point2, Point2> closest_farthest_corners(const ConvexPolygon & p);

}  // namespace leo::geom

#endif  // LEO_GEOMETRY_HPP_
