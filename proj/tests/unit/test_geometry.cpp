#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "lattice/error.hpp"
#include "lattice/geometry.hpp"

using namespace lattice;

namespace {

double brute_length(const CurveSet& c) {
  double s = 0.0;
  for (const auto& seg : c.segments) s += std::hypot(seg.p1.x - seg.p0.x, seg.p1.y - seg.p0.y);
  for (const auto& a : c.arcs) s += std::abs(a.sweep) * a.radius;
  return s;
}

// Junction count for straight-only sets: every point where segments meet,
// weighted 2 for a segment passing through and 1 for a segment ending there,
// counts when the weight reaches 3.
int brute_junctions(const std::vector<Segment>& segs) {
  auto cross = [](Point a, Point b, Point c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  };
  std::vector<Point> candidates;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    for (std::size_t j = i + 1; j < segs.size(); ++j) {
      const Point p = segs[i].p0, r = {segs[i].p1.x - p.x, segs[i].p1.y - p.y};
      const Point q = segs[j].p0, s = {segs[j].p1.x - q.x, segs[j].p1.y - q.y};
      const double den = r.x * s.y - r.y * s.x;
      if (std::abs(den) < 1e-12) {
        for (Point e : {segs[j].p0, segs[j].p1}) {
          if (std::abs(cross(segs[i].p0, segs[i].p1, e)) < 1e-9) candidates.push_back(e);
        }
        continue;
      }
      const double t = ((q.x - p.x) * s.y - (q.y - p.y) * s.x) / den;
      const double u = ((q.x - p.x) * r.y - (q.y - p.y) * r.x) / den;
      if (t >= -1e-12 && t <= 1 + 1e-12 && u >= -1e-12 && u <= 1 + 1e-12) {
        candidates.push_back({p.x + t * r.x, p.y + t * r.y});
      }
    }
  }
  std::vector<Point> nodes;
  for (const auto& c : candidates) {
    bool dup = false;
    for (const auto& n : nodes) dup = dup || std::hypot(n.x - c.x, n.y - c.y) < 1e-7;
    if (!dup) nodes.push_back(c);
  }
  int count = 0;
  for (const auto& n : nodes) {
    int weight = 0;
    for (const auto& s : segs) {
      const bool at_end = std::hypot(s.p0.x - n.x, s.p0.y - n.y) < 1e-7 ||
                          std::hypot(s.p1.x - n.x, s.p1.y - n.y) < 1e-7;
      const double len = std::hypot(s.p1.x - s.p0.x, s.p1.y - s.p0.y);
      const double d = std::abs(cross(s.p0, s.p1, n)) / len;
      const double t = ((n.x - s.p0.x) * (s.p1.x - s.p0.x) + (n.y - s.p0.y) * (s.p1.y - s.p0.y)) / (len * len);
      if (at_end) {
        weight += 1;
      } else if (d < 1e-7 && t > 0 && t < 1) {
        weight += 2;
      }
    }
    if (weight >= 3) ++count;
  }
  return count;
}

bool inside_bbox(const CurveSet& c, double tol) {
  const Box& b = c.bbox;
  auto in = [&](Point p) {
    return p.x >= b.origin.x - tol && p.x <= b.origin.x + b.side + tol && p.y >= b.origin.y - tol &&
           p.y <= b.origin.y + b.side + tol;
  };
  for (const auto& s : c.segments) {
    if (!in(s.p0) || !in(s.p1)) return false;
  }
  for (const auto& a : c.arcs) {
    for (int k = 0; k <= 256; ++k) {
      if (!in(a.point_at(a.start_angle + a.sweep * k / 256.0))) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("plain square cell") {
  const CurveSet c = build_unit_cell(parse_key("00220000"), 10.0);
  CHECK(c.segments.size() == 8);
  CHECK(c.arcs.empty());
  CHECK(c.total_length() == doctest::Approx(40.0).epsilon(1e-12));
}

TEST_CASE("plus support adds both centre lines") {
  const CurveSet c = build_unit_cell(parse_key("00220010"), 10.0);
  CHECK(c.total_length() == doctest::Approx(60.0).epsilon(1e-12));
}

TEST_CASE("construction is additive") {
  const double s = 10.0;
  for (const auto& key : enumerate_canonical_keys()) {
    if (key.interior != Interior::None) continue;
    const double base = build_unit_cell(key, s).total_length();
    DesignKey plus = key;
    plus.interior = Interior::Plus;
    CHECK(build_unit_cell(plus, s).total_length() == doctest::Approx(base + 2 * s).epsilon(1e-9));
    plus.interior_sub = 1;
    CHECK(build_unit_cell(plus, s).total_length() ==
          doctest::Approx(base + 2 * s + 2 * std::numbers::pi * s / 4).epsilon(1e-9));
    if (key.vertex == VertexStyle::AsIs) {
      DesignKey x = key;
      x.interior = Interior::X;
      CHECK(build_unit_cell(x, s).total_length() ==
            doctest::Approx(base + 2 * std::sqrt(2.0) * s).epsilon(1e-9));
    }
  }
}

TEST_CASE("every built cell lies inside its bbox and has positive length") {
  for (const auto& key : enumerate_canonical_keys()) {
    const CurveSet c = build_unit_cell(key, 10.0);
    CHECK(c.total_length() > 0.0);
    CHECK(c.total_length() == doctest::Approx(brute_length(c)).epsilon(1e-12));
    CHECK(inside_bbox(c, 1e-9));
    for (const auto& a : c.arcs) {
      CHECK(a.radius > 0.0);
      CHECK(std::abs(a.sweep) <= 2 * std::numbers::pi + 1e-12);
      CHECK(a.sweep != 0.0);
    }
  }
}

TEST_CASE("non-canonical key is rejected") {
  DesignKey k = parse_key("00220000");
  k.vertex_sub = 1;
  CHECK_THROWS_AS(build_unit_cell(k, 10.0), ContractViolation);
  CHECK_THROWS_AS(build_unit_cell(parse_key("00220000"), 0.0), ContractViolation);
}

TEST_CASE("tessellation") {
  const CurveSet cell = build_unit_cell(parse_key("00220000"), 10.0);
  const CurveSet one = tessellate(cell, 1, 1);
  CHECK(one.segments.size() == cell.segments.size());
  CHECK(one.total_length() == cell.total_length());

  // A 3x3 grid graph has 12 unit edges.
  const CurveSet grid = tessellate(cell, 2, 2);
  CHECK(grid.total_length() == doctest::Approx(120.0).epsilon(1e-12));
  CHECK(grid.bbox.side == doctest::Approx(20.0));

  CHECK_THROWS_AS(tessellate(cell, 2, 3), ContractViolation);
  CHECK_THROWS_AS(tessellate(cell, 0, 0), ContractViolation);

  for (const auto& key : enumerate_canonical_keys()) {
    const CurveSet c = build_unit_cell(key, 10.0);
    CHECK(tessellate(c, 2, 2).total_length() <= 4 * c.total_length() + 1e-9);
  }
}

TEST_CASE("scale_to_box") {
  const CurveSet grid = tessellate(build_unit_cell(parse_key("00220000"), 10.0), 2, 2);
  const CurveSet same = scale_to_box(grid, grid.bbox.side);
  CHECK(same.total_length() == doctest::Approx(grid.total_length()).epsilon(1e-12));
  const CurveSet twice = scale_to_box(grid, 2 * grid.bbox.side);
  CHECK(twice.total_length() == doctest::Approx(2 * grid.total_length()).epsilon(1e-12));
  CHECK(twice.bbox.side == doctest::Approx(40.0));
  CHECK(build_lattice(parse_key("00220000")).total_length() == doctest::Approx(120.0).epsilon(1e-12));
}

TEST_CASE("tessellate then scale commutes with scale then tessellate") {
  for (const char* k : {"00220000", "00231121", "11341021", "21440120", "10330111"}) {
    const CurveSet cell = build_unit_cell(parse_key(k), 10.0);
    const double a = scale_to_box(tessellate(cell, 2, 2), 37.0).total_length();
    const CurveSet small = scale_to_box(cell, cell.bbox.side * 0.5);
    const double b = scale_to_box(tessellate(small, 2, 2), 37.0).total_length();
    CHECK(a == doctest::Approx(b).epsilon(1e-9));
  }
}

TEST_CASE("geometry features") {
  CurveSet square;
  square.segments = {{{0, 0}, {20, 0}}, {{20, 0}, {20, 20}}, {{20, 20}, {0, 20}}, {{0, 20}, {0, 0}}};
  square.bbox = compute_bbox(square);
  const GeomFeatures f = geometry_features(square, 0.5);
  CHECK(f.total_length == doctest::Approx(80.0));
  CHECK(f.relative_density == doctest::Approx(0.1));
  CHECK(f.max_free_span == doctest::Approx(20.0));
  CHECK(f.n_intersections == 0);
  CHECK_THROWS_AS(geometry_features(square, 5.0), DomainError);

  CurveSet circle;
  circle.arcs = {{{0, 0}, 3.0, 0.0, 2 * std::numbers::pi}};
  circle.bbox = compute_bbox(circle);
  CHECK(geometry_features(circle, 0.1).total_length == doctest::Approx(2 * std::numbers::pi * 3.0));
}

TEST_CASE("plus support intersections match a brute-force count") {
  const CurveSet none = build_unit_cell(parse_key("00220000"), 10.0);
  const CurveSet plus = build_unit_cell(parse_key("00220010"), 10.0);
  CHECK(brute_junctions(none.segments) == 0);
  // Two perimeter midpoints per centre line plus their crossing.
  CHECK(brute_junctions(plus.segments) == 5);
  CHECK(geometry_features(none, 0.5).n_intersections == brute_junctions(none.segments));
  CHECK(geometry_features(plus, 0.5).n_intersections == brute_junctions(plus.segments));
  const CurveSet grid = build_lattice(parse_key("00220010"));
  CHECK(geometry_features(grid, 0.5).n_intersections == brute_junctions(grid.segments));
}

TEST_CASE("feature invariants over every key") {
  for (const auto& key : enumerate_canonical_keys()) {
    const GeomFeatures f = geometry_features(build_lattice(key), 0.5);
    CHECK(f.total_length >= f.max_free_span);
    CHECK(f.max_free_span >= 0.0);
    CHECK(f.n_intersections >= 0);
    CHECK(f.relative_density > 0.0);
    CHECK(f.relative_density < 1.0);
  }
}

TEST_CASE("curve text round-trip") {
  const CurveSet c = build_lattice(parse_key("00231121"));
  std::ostringstream a;
  write_curves(a, c);
  std::istringstream in(a.str());
  const CurveSet back = read_curves(in);
  std::ostringstream b;
  write_curves(b, back);
  CHECK(a.str() == b.str());
  CHECK(back.segments.size() == c.segments.size());
  CHECK(back.arcs.size() == c.arcs.size());
  CHECK(back.total_length() == c.total_length());

  std::istringstream bad("S 1 2 3\n");
  CHECK_THROWS_AS(read_curves(bad), FormatError);
}
