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

#include <doctest.h>

#include <cmath>

#include "leo/geometry.hpp"
#include "leo/rng.hpp"

using namespace leo;
using geom::ConvexPolygon;
using geom::ParallelogramState;
using geom::Point2;
using geom::Segment;

namespace {

ParallelogramState random_state(Rng & rng) {
  ParallelogramState s;
  s.rf_x = rng.uniform(-50.0, 50.0);
  s.rf_y = rng.uniform(-50.0, 50.0);
  s.l = rng.uniform(0.5, 20.0);
  s.w = rng.uniform(0.5, 8.0);
  s.theta = rng.uniform(-M_PI + 1e-6, M_PI);
  s.theta_star = rng.uniform(0.15, M_PI - 0.15);
  s.v_x = rng.uniform(-10.0, 10.0);
  s.v_y = rng.uniform(-10.0, 10.0);
  return s;
}

bool point_in_convex(const Point2 & p, const ConvexPolygon & poly) {
  const auto & v = poly.vertices();
  for (size_t i = 0; i < v.size(); ++i) {
    if (geom::cross(v[(i + 1) % v.size()] - v[i], p - v[i]) < 0.0) return false;
  }
  return true;
}

// Monte-Carlo area oracle over the joint bounding box.
double mc_intersection_area(const ConvexPolygon & a, const ConvexPolygon & b, size_t samples, Rng & rng) {
  double xmin = 1e18, xmax = -1e18, ymin = 1e18, ymax = -1e18;
  for (const auto & poly : {a, b}) {
    for (const auto & p : poly.vertices()) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  size_t hit = 0;
  for (size_t i = 0; i < samples; ++i) {
    Point2 p{rng.uniform(xmin, xmax), rng.uniform(ymin, ymax)};
    if (point_in_convex(p, a) && point_in_convex(p, b)) ++hit;
  }
  return (xmax - xmin) * (ymax - ymin) * static_cast<double>(hit) / static_cast<double>(samples);
}

ConvexPolygon unit_square_at(double x0, double y0) {
  return ConvexPolygon::from_ccw({{x0, y0}, {x0 + 1, y0}, {x0 + 1, y0 + 1}, {x0, y0 + 1}});
}

}  // namespace

TEST_CASE("complete_parallelogram fourth vertex") {
  auto p = geom::complete_parallelogram({0, 0}, {1, 0}, {1, 1});
  REQUIRE(p.size() == 4);
  CHECK(p.vertices()[3].x == doctest::Approx(0.0));
  CHECK(p.vertices()[3].y == doctest::Approx(1.0));

  auto q = geom::complete_parallelogram({0, 0}, {2, 0}, {2, 1});
  CHECK(q.vertices()[3].x == doctest::Approx(0.0));
  CHECK(q.vertices()[3].y == doctest::Approx(1.0));

  auto r = geom::complete_parallelogram({0, 0}, {4, 0}, {5, 2});
  CHECK(r.vertices()[3].x == doctest::Approx(1.0));
  CHECK(r.vertices()[3].y == doctest::Approx(2.0));
  // opposite edges are equal vectors
  const auto & v = r.vertices();
  CHECK(geom::norm((v[1] - v[0]) - (v[2] - v[3])) == doctest::Approx(0.0));
  CHECK(geom::norm((v[2] - v[1]) - (v[3] - v[0])) == doctest::Approx(0.0));

  CHECK_THROWS_AS(geom::complete_parallelogram({0, 0}, {1, 1}, {2, 2}), CollinearPoints);
}

TEST_CASE("state_to_polygon rectangle and skewed cases") {
  ParallelogramState s{0, 0, 2, 1, 0, M_PI / 2, 0, 0};
  auto p = geom::state_to_polygon(s);
  const auto & v = p.vertices();
  CHECK(v[0].x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v[1].x == doctest::Approx(2.0));
  CHECK(v[2].y == doctest::Approx(1.0));
  CHECK(v[3].x == doctest::Approx(0.0).epsilon(1e-9));

  ParallelogramState sk{0, 0, 2, 1, 0, M_PI / 3, 0, 0};
  auto pk = geom::state_to_polygon(sk);
  CHECK(pk.vertices()[2].x == doctest::Approx(2.5));
  CHECK(pk.vertices()[2].y == doctest::Approx(std::sqrt(3.0) / 2));
  CHECK(pk.vertices()[3].x == doctest::Approx(0.5));
  CHECK(pk.vertices()[3].y == doctest::Approx(std::sqrt(3.0) / 2));
}

TEST_CASE("polygon_to_state round trip on 1000 random states") {
  Rng rng(101);
  for (int i = 0; i < 1000; ++i) {
    ParallelogramState s = random_state(rng);
    ParallelogramState r = geom::polygon_to_state(geom::state_to_polygon(s), s.v_x, s.v_y);
    auto sa = s.to_array();
    auto ra = r.to_array();
    for (int k = 0; k < 8; ++k) {
      double d = sa[k] - ra[k];
      if (k == 4) d = geom::wrap_angle(d);
      CHECK(std::abs(d) < 1e-9);
    }
  }
}

TEST_CASE("rectangle case has four right angles") {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    ParallelogramState s = random_state(rng);
    s.theta_star = M_PI / 2;
    auto v = geom::state_to_polygon(s).vertices();
    for (size_t k = 0; k < 4; ++k) {
      Point2 e1 = v[(k + 1) % 4] - v[k];
      Point2 e2 = v[(k + 2) % 4] - v[(k + 1) % 4];
      double ang = std::acos(std::clamp(geom::dot(e1, e2) / (geom::norm(e1) * geom::norm(e2)), -1.0, 1.0));
      CHECK(std::abs(ang - M_PI / 2) < 1e-9);
    }
  }
}

TEST_CASE("polygon intersection area basics") {
  auto sq = unit_square_at(0, 0);
  CHECK(geom::polygon_intersection_area(sq, sq) == doctest::Approx(1.0));
  auto sh = ConvexPolygon::from_ccw({{0.5, 0}, {1.5, 0}, {1.5, 1}, {0.5, 1}});
  CHECK(geom::polygon_intersection_area(sq, sh) == doctest::Approx(0.5));
  auto far = unit_square_at(10, 10);
  CHECK(geom::polygon_intersection_area(sq, far) == doctest::Approx(0.0));
}

TEST_CASE("intersection area vs Monte-Carlo oracle") {
  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    ParallelogramState sa = random_state(rng);
    ParallelogramState sb = random_state(rng);
    // keep the pair in a shared neighbourhood so overlaps actually occur
    sb.rf_x = sa.rf_x + rng.uniform(-5.0, 5.0);
    sb.rf_y = sa.rf_y + rng.uniform(-5.0, 5.0);
    auto pa = geom::state_to_polygon(sa);
    auto pb = geom::state_to_polygon(sb);
    double analytic = geom::polygon_intersection_area(pa, pb);
    double mc = mc_intersection_area(pa, pb, 200000, rng);
    double scale = std::max(1.0, (pa.area() + pb.area()));
    CHECK(std::abs(analytic - mc) / scale < 2.5e-2);
  }
}

TEST_CASE("giou examples") {
  auto sq = unit_square_at(0, 0);
  CHECK(geom::giou(sq, sq) == doctest::Approx(1.0));
  auto sh = ConvexPolygon::from_ccw({{0.5, 0}, {1.5, 0}, {1.5, 1}, {0.5, 1}});
  CHECK(geom::giou(sq, sh) == doctest::Approx(1.0 / 3.0));
  // monotone decreasing in the gap, always <= IoU
  double prev = 2.0;
  for (double gap : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    auto far = unit_square_at(1.0 + gap, 0.0);
    double g = geom::giou(sq, far);
    CHECK(g < prev);
    CHECK(g <= geom::iou(sq, far) + 1e-12);
    CHECK(g > -1.0);
    prev = g;
  }
}

TEST_CASE("diou examples") {
  auto sq = unit_square_at(0, 0);
  CHECK(geom::diou(sq, sq) == doctest::Approx(1.0));
  auto sh = ConvexPolygon::from_ccw({{0.5, 0}, {1.5, 0}, {1.5, 1}, {0.5, 1}});
  CHECK(geom::diou(sq, sh) == doctest::Approx(1.0 / 3.0 - 0.25 / 3.25));
  auto inner = unit_square_at(-0.5, -0.5);
  auto outer = ConvexPolygon::from_ccw({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}});
  CHECK(geom::iou(inner, outer) == doctest::Approx(0.25));
  CHECK(geom::diou(inner, outer) == doctest::Approx(0.25));
}

TEST_CASE("overlap metrics are symmetric and rigid-motion invariant") {
  Rng rng(19);
  for (int i = 0; i < 100; ++i) {
    ParallelogramState sa = random_state(rng);
    ParallelogramState sb = random_state(rng);
    sb.rf_x = sa.rf_x + rng.uniform(-6.0, 6.0);
    sb.rf_y = sa.rf_y + rng.uniform(-6.0, 6.0);
    auto pa = geom::state_to_polygon(sa);
    auto pb = geom::state_to_polygon(sb);
    CHECK(std::abs(geom::iou(pa, pb) - geom::iou(pb, pa)) < 1e-12);
    CHECK(std::abs(geom::giou(pa, pb) - geom::giou(pb, pa)) < 1e-12);
    CHECK(std::abs(geom::diou(pa, pb) - geom::diou(pb, pa)) < 1e-12);
    CHECK(geom::giou(pa, pb) <= geom::iou(pa, pb) + 1e-12);
    CHECK(geom::polygon_intersection_area(pa, pb) <= std::min(pa.area(), pb.area()) + 1e-9);

    double phi = rng.uniform(-M_PI, M_PI);
    Point2 t{rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0)};
    auto rigid = [&](const ConvexPolygon & p) {
      std::vector<Point2> out;
      for (const auto & v : p.vertices()) {
        out.push_back({std::cos(phi) * v.x - std::sin(phi) * v.y + t.x,
                       std::sin(phi) * v.x + std::cos(phi) * v.y + t.y});
      }
      return ConvexPolygon::from_ccw(out);
    };
    // DIoU's enclosing box is axis-aligned, so only IoU/GIoU are checked
    // under rotation.
    CHECK(std::abs(geom::iou(rigid(pa), rigid(pb)) - geom::iou(pa, pb)) < 1e-9);
    CHECK(std::abs(geom::giou(rigid(pa), rigid(pb)) - geom::giou(pa, pb)) < 1e-9);
  }
}

TEST_CASE("hausdorff segment distance") {
  Segment s1({0, 0}, {1, 0});
  CHECK(geom::hausdorff_segments(s1, s1) == doctest::Approx(0.0));
  Segment s2({0, 1}, {1, 1});
  CHECK(geom::hausdorff_segments(s1, s2) == doctest::Approx(1.0));
  Segment s3({0, 0}, {2, 0});
  CHECK(geom::hausdorff_segments(s1, s3) == doctest::Approx(1.0));

  Rng rng(23);
  auto random_segment = [&]() {
    Point2 a{rng.uniform(-10, 10), rng.uniform(-10, 10)};
    Point2 b{rng.uniform(-10, 10), rng.uniform(-10, 10)};
    if (geom::norm(b - a) < 1e-3) b.x += 1.0;
    return Segment(a, b);
  };
  for (int i = 0; i < 1000; ++i) {
    Segment a = random_segment(), b = random_segment(), c = random_segment();
    double ab = geom::hausdorff_segments(a, b);
    double bc = geom::hausdorff_segments(b, c);
    double ac = geom::hausdorff_segments(a, c);
    CHECK(ac <= ab + bc + 1e-9);
  }
}

TEST_CASE("dual-line RANSAC L-shape fitting") {
  // noiseless: two edges of the unit square meeting at (1,0)
  std::vector<Point2> pts;
  for (int i = 0; i < 20; ++i) pts.push_back({i / 19.0, 0.0});
  for (int i = 0; i < 20; ++i) pts.push_back({1.0, i / 19.0});
  auto prim = geom::fit_l_shape_ransac(pts, 200, 0.05, 1);
  REQUIRE(prim.kind == geom::ShapeKind::L_SHAPE);
  CHECK(geom::norm(prim.extension_points[1] - Point2{1.0, 0.0}) < 1e-6);

  // noisy seeded trials
  int ok = 0;
  for (uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng(9000 + trial);
    std::vector<Point2> noisy;
    for (int i = 0; i < 20; ++i) noisy.push_back({i / 19.0 + 0.05 * rng.gaussian(), 0.05 * rng.gaussian()});
    for (int i = 0; i < 20; ++i) noisy.push_back({1.0 + 0.05 * rng.gaussian(), i / 19.0 + 0.05 * rng.gaussian()});
    auto p = geom::fit_l_shape_ransac(noisy, 200, 0.15, trial);
    if (p.kind == geom::ShapeKind::L_SHAPE && geom::norm(p.extension_points[1] - Point2{1.0, 0.0}) < 0.15) {
      ++ok;
    }
  }
  CHECK(ok >= 95);

  // collinear contour degrades to an I shape
  std::vector<Point2> line;
  for (int i = 0; i < 40; ++i) line.push_back({i * 0.1, 2.0});
  auto iprim = geom::fit_l_shape_ransac(line, 100, 0.1, 3);
  CHECK(iprim.kind == geom::ShapeKind::I_SHAPE);

  // too few points collapses to the centroid
  std::vector<Point2> few{{0, 0}, {1, 0}, {0, 1}};
  auto pprim = geom::fit_l_shape_ransac(few, 100, 0.1, 4);
  REQUIRE(pprim.kind == geom::ShapeKind::POINT);
  CHECK(pprim.extension_points[0].x == doctest::Approx(1.0 / 3));
  CHECK(pprim.extension_points[0].y == doctest::Approx(1.0 / 3));
}

TEST_CASE("closest and farthest corners") {
  auto p = ConvexPolygon::from_ccw({{1, 0}, {2, 0}, {2, 1}, {1, 1}});
  auto [cp, fp] = geom::closest_farthest_corners(p);
  CHECK(cp.x == doctest::Approx(1.0));
  CHECK(cp.y == doctest::Approx(0.0));
  CHECK(fp.x == doctest::Approx(2.0));
  CHECK(fp.y == doctest::Approx(1.0));

  // symmetric square: ties break toward the smaller vertex index
  auto c = ConvexPolygon::from_ccw({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}});
  auto [cc, cf] = geom::closest_farthest_corners(c);
  CHECK(cc.x == doctest::Approx(-1.0));
  CHECK(cc.y == doctest::Approx(-1.0));
  CHECK(cf.x == doctest::Approx(-1.0));
  CHECK(cf.y == doctest::Approx(-1.0));

  Rng rng(77);
  for (int i = 0; i < 200; ++i) {
    auto poly = geom::state_to_polygon(random_state(rng));
    auto [pc, pf] = geom::closest_farthest_corners(poly);
    double dmin = 1e18, dmax = -1.0;
    for (const auto & v : poly.vertices()) {
      dmin = std::min(dmin, geom::norm(v));
      dmax = std::max(dmax, geom::norm(v));
    }
    CHECK(geom::norm(pc) == doctest::Approx(dmin));
    CHECK(geom::norm(pf) == doctest::Approx(dmax));
  }
}

TEST_CASE("validation and error paths") {
  CHECK_THROWS_AS(ConvexPolygon::from_ccw({{0, 0}, {1, 0}}), InvalidGeometry);
  CHECK_THROWS_AS(ConvexPolygon::from_ccw({{0, 0}, {0, 1}, {1, 0}}), InvalidGeometry);  // CW
  CHECK_THROWS_AS(
      geom::polygon_to_state(ConvexPolygon::from_ccw({{0, 0}, {2, 0}, {3, 2}, {0, 1}})),
      InvalidGeometry);
  CHECK_THROWS_AS(Segment({0, 0}, {0, 0}), InvalidGeometry);
  ParallelogramState bad;
  bad.l = -1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidGeometry);
  ParallelogramState bad_ts;
  bad_ts.theta_star = M_PI;
  CHECK_THROWS_AS(bad_ts.validate(), InvalidGeometry);
}

TEST_CASE("wrap_angle lands in (-pi, pi]") {
  CHECK(geom::wrap_angle(M_PI) == doctest::Approx(M_PI));
  CHECK(geom::wrap_angle(-M_PI) == doctest::Approx(M_PI));
  CHECK(geom::wrap_angle(3 * M_PI / 2) == doctest::Approx(-M_PI / 2));
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    double a = rng.uniform(-40.0, 40.0);
    double w = geom::wrap_angle(a);
    CHECK(w > -M_PI - 1e-12);
    CHECK(w <= M_PI + 1e-12);
    CHECK(std::abs(std::remainder(a - w, 2 * M_PI)) < 1e-9);
  }
}
