#include "lattice/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "lattice/error.hpp"

namespace lattice {
namespace {

constexpr double kPi = std::numbers::pi;

Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
double norm(Point a) { return std::hypot(a.x, a.y); }
Point midpoint(Point a, Point b) { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }

bool near(Point a, Point b, double tol) {
  return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol;
}

// Two arcs through a -> midpoint -> b, the first bulging to the left of the
// chord direction and the second to the right.
void append_two_arcs(CurveSet& out, Point a, Point b, double bulge_fraction) {
  const double length = norm(b - a);
  const Point dir = (1.0 / length) * (b - a);
  const Point left{-dir.y, dir.x};
  const Point m = midpoint(a, b);
  const double chord = 0.5 * length;
  const double sagitta = bulge_fraction * length;
  const double central = 4.0 * std::atan(2.0 * sagitta / chord);
  const double radius = 0.5 * chord / std::sin(0.5 * central);
  const double offset = radius * std::cos(0.5 * central);

  auto half = [&](Point from, Point to, double side) {
    const Point mid = midpoint(from, to);
    Arc arc;
    arc.center = mid - (side * offset) * left;
    arc.radius = radius;
    const Point rel = from - arc.center;
    arc.start_angle = std::atan2(rel.y, rel.x);
    // Bulging to the left of a left-to-right chord runs clockwise.
    arc.sweep = -side * central;
    out.arcs.push_back(arc);
  };
  half(a, m, +1.0);
  half(m, b, -1.0);
}

void append_edge(CurveSet& out, Point a, Point b, int pieces, EdgeStyle style,
                 double bulge_fraction) {
  for (int i = 0; i < pieces; ++i) {
    const double t0 = static_cast<double>(i) / pieces;
    const double t1 = static_cast<double>(i + 1) / pieces;
    const Point p0 = a + t0 * (b - a);
    const Point p1 = (i + 1 == pieces) ? b : a + t1 * (b - a);
    if (style == EdgeStyle::Straight) {
      out.segments.push_back({p0, p1});
    } else {
      append_two_arcs(out, p0, p1, bulge_fraction);
    }
  }
}

Arc quarter_arc(Point center, double radius, Point from, Point to) {
  Arc arc;
  arc.center = center;
  arc.radius = radius;
  const Point r0 = from - center;
  const Point r1 = to - center;
  arc.start_angle = std::atan2(r0.y, r0.x);
  arc.sweep = std::remainder(std::atan2(r1.y, r1.x) - arc.start_angle, 2.0 * kPi);
  return arc;
}

struct Bounds {
  double xmin = HUGE_VAL, xmax = -HUGE_VAL, ymin = HUGE_VAL, ymax = -HUGE_VAL;
  void add(Point p) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  bool overlaps(const Bounds& o, double tol) const {
    return xmin <= o.xmax + tol && o.xmin <= xmax + tol && ymin <= o.ymax + tol &&
           o.ymin <= ymax + tol;
  }
};

bool same_arc(const Arc& a, const Arc& b) {
  if (!near(a.center, b.center, kCurveMatchTolerance)) return false;
  if (std::abs(a.radius - b.radius) > kCurveMatchTolerance) return false;
  if (std::abs(std::abs(a.sweep) - std::abs(b.sweep)) > kCurveMatchTolerance) return false;
  const double tol = kCurveMatchTolerance;
  const bool forward = near(a.start(), b.start(), tol) && near(a.end(), b.end(), tol);
  const bool reverse = near(a.start(), b.end(), tol) && near(a.end(), b.start(), tol);
  if (!forward && !reverse) return false;
  return near(a.point_at(a.start_angle + 0.5 * a.sweep),
              b.point_at(b.start_angle + 0.5 * b.sweep), tol);
}

bool same_segment(const Segment& a, const Segment& b) {
  const double tol = kCurveMatchTolerance;
  return (near(a.p0, b.p0, tol) && near(a.p1, b.p1, tol)) ||
         (near(a.p0, b.p1, tol) && near(a.p1, b.p0, tol));
}

// Polyline view of one curve, used for intersection tests.
struct Polyline {
  std::vector<Point> points;
  Bounds bounds;
  bool straight = false;
  std::size_t segment_index = 0;
};

std::vector<Polyline> polylines(const CurveSet& curves) {
  std::vector<Polyline> out;
  out.reserve(curves.segments.size() + curves.arcs.size());
  for (std::size_t i = 0; i < curves.segments.size(); ++i) {
    Polyline p;
    p.points = {curves.segments[i].p0, curves.segments[i].p1};
    p.straight = true;
    p.segment_index = i;
    out.push_back(std::move(p));
  }
  for (const auto& arc : curves.arcs) {
    Polyline p;
    const int pieces = std::max(
        2, static_cast<int>(std::ceil(std::abs(arc.sweep) / (2.0 * kPi) * kArcPointsPerTurn - 1e-9)));
    for (int k = 0; k <= pieces; ++k) {
      if (k == 0) {
        p.points.push_back(arc.start());
      } else if (k == pieces) {
        p.points.push_back(arc.end());
      } else {
        p.points.push_back(arc.point_at(arc.start_angle + arc.sweep * k / pieces));
      }
    }
    out.push_back(std::move(p));
  }
  for (auto& p : out) {
    for (const auto& q : p.points) p.bounds.add(q);
  }
  return out;
}

double point_segment_distance(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

double point_polyline_distance(Point p, const Polyline& line) {
  double best = HUGE_VAL;
  for (std::size_t k = 0; k + 1 < line.points.size(); ++k) {
    best = std::min(best, point_segment_distance(p, line.points[k], line.points[k + 1]));
  }
  return best;
}

void segment_crossings(Point p0, Point p1, Point q0, Point q1, double tol,
                       std::vector<Point>& out) {
  const Point r = p1 - p0;
  const Point s = q1 - q0;
  const double denom = cross(r, s);
  const double lr = norm(r);
  const double ls = norm(s);
  if (std::abs(denom) <= 1e-12 * lr * ls) {
    // Parallel: only overlapping endpoints count.
    for (Point e : {q0, q1}) {
      if (point_segment_distance(e, p0, p1) <= tol) out.push_back(e);
    }
    for (Point e : {p0, p1}) {
      if (point_segment_distance(e, q0, q1) <= tol) out.push_back(e);
    }
    return;
  }
  const double t = cross(q0 - p0, s) / denom;
  const double u = cross(q0 - p0, r) / denom;
  const double tt = tol / lr;
  const double tu = tol / ls;
  if (t < -tt || t > 1.0 + tt || u < -tu || u > 1.0 + tu) return;
  out.push_back(p0 + std::clamp(t, 0.0, 1.0) * r);
}

}  // namespace

Point Arc::point_at(double angle) const {
  return {center.x + radius * std::cos(angle), center.y + radius * std::sin(angle)};
}

double Arc::length() const { return std::abs(sweep) * radius; }

double CurveSet::total_length() const {
  double total = 0.0;
  for (const auto& s : segments) total += norm(s.p1 - s.p0);
  for (const auto& a : arcs) total += a.length();
  return total;
}

Box compute_bbox(const CurveSet& curves) {
  Bounds b;
  for (const auto& s : curves.segments) {
    b.add(s.p0);
    b.add(s.p1);
  }
  for (const auto& a : curves.arcs) {
    b.add(a.start());
    b.add(a.end());
    const double lo = std::min(a.start_angle, a.start_angle + a.sweep);
    const double hi = std::max(a.start_angle, a.start_angle + a.sweep);
    for (double k = std::ceil(lo / (0.5 * kPi)); k * 0.5 * kPi <= hi; k += 1.0) {
      b.add(a.point_at(k * 0.5 * kPi));
    }
  }
  if (curves.empty()) return {};
  const double w = b.xmax - b.xmin;
  const double h = b.ymax - b.ymin;
  Box box;
  box.side = std::max(w, h);
  box.origin = {b.xmin - 0.5 * (box.side - w), b.ymin - 0.5 * (box.side - h)};
  return box;
}

CurveSet build_unit_cell(const DesignKey& key, double cell_side,
                         const CellProportions& proportions) {
  if (!is_canonical(key)) {
    throw ContractViolation("build_unit_cell: key " + format_key(key) + " is not canonical");
  }
  if (!(cell_side > 0.0)) throw ContractViolation("build_unit_cell: cell_side must be > 0");

  const double s = cell_side;
  const double c = key.vertex == VertexStyle::AsIs ? 0.0 : s * proportions.corner_offset;
  CurveSet out;
  out.pitch = s;

  // Corner treatment; anchors are where X-supports attach.
  struct Corner {
    Point at;
    double dx, dy;  // directions into the cell
  };
  const std::array<Corner, 4> corners = {{
      {{0.0, 0.0}, +1.0, +1.0},
      {{s, 0.0}, -1.0, +1.0},
      {{s, s}, -1.0, -1.0},
      {{0.0, s}, +1.0, -1.0},
  }};
  std::array<Point, 4> anchors{};
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  for (std::size_t i = 0; i < corners.size(); ++i) {
    const auto& k = corners[i];
    const Point on_h{k.at.x + k.dx * c, k.at.y};
    const Point on_v{k.at.x, k.at.y + k.dy * c};
    switch (key.vertex) {
      case VertexStyle::AsIs:
        anchors[i] = k.at;
        break;
      case VertexStyle::StraightEdge:
        if (key.vertex_sub == 0) {
          out.segments.push_back({on_h, on_v});
        } else {
          append_two_arcs(out, on_h, on_v, proportions.arc_bulge);
        }
        anchors[i] = midpoint(on_h, on_v);
        break;
      case VertexStyle::Arc: {
        const Point diag{k.dx * inv_sqrt2, k.dy * inv_sqrt2};
        if (key.vertex_sub == 0) {
          out.arcs.push_back(quarter_arc(k.at, c, on_h, on_v));
          anchors[i] = k.at + c * diag;
        } else {
          const Point center{k.at.x + k.dx * c, k.at.y + k.dy * c};
          out.arcs.push_back(quarter_arc(center, c, on_h, on_v));
          anchors[i] = center - c * diag;
        }
        break;
      }
    }
  }

  // Opposite edges are translates of each other so shared edges coincide
  // exactly after tiling.
  const double bulge = proportions.arc_bulge;
  append_edge(out, {c, 0.0}, {s - c, 0.0}, key.h_segments, key.h_style, bulge);
  append_edge(out, {c, s}, {s - c, s}, key.h_segments, key.h_style, bulge);
  append_edge(out, {0.0, c}, {0.0, s - c}, key.v_segments, key.v_style, bulge);
  append_edge(out, {s, c}, {s, s - c}, key.v_segments, key.v_style, bulge);

  switch (key.interior) {
    case Interior::None:
      break;
    case Interior::Plus:
      out.segments.push_back({{0.0, 0.5 * s}, {s, 0.5 * s}});
      out.segments.push_back({{0.5 * s, 0.0}, {0.5 * s, s}});
      break;
    case Interior::X:
      out.segments.push_back({anchors[0], anchors[2]});
      out.segments.push_back({anchors[1], anchors[3]});
      break;
  }
  if (key.interior != Interior::None && key.interior_sub == 1) {
    Arc circle;
    circle.center = {0.5 * s, 0.5 * s};
    circle.radius = s * proportions.circle_radius;
    circle.start_angle = 0.0;
    circle.sweep = 2.0 * kPi;
    out.arcs.push_back(circle);
  }

  out.bbox = compute_bbox(out);
  return out;
}

CurveSet tessellate(const CurveSet& cell, int nx, int ny) {
  if (nx < 1 || ny < 1) throw ContractViolation("tessellate: nx and ny must be >= 1");
  if (nx != ny) throw ContractViolation("tessellate: only square grids (nx == ny) are supported");
  const double pitch = cell.pitch > 0.0 ? cell.pitch : cell.bbox.side;
  CurveSet out;
  out.pitch = pitch;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Point shift{i * pitch, j * pitch};
      for (const auto& s : cell.segments) {
        const Segment moved{s.p0 + shift, s.p1 + shift};
        const bool dup = std::any_of(out.segments.begin(), out.segments.end(),
                                     [&](const Segment& o) { return same_segment(o, moved); });
        if (!dup) out.segments.push_back(moved);
      }
      for (const auto& a : cell.arcs) {
        Arc moved = a;
        moved.center = a.center + shift;
        const bool dup = std::any_of(out.arcs.begin(), out.arcs.end(),
                                     [&](const Arc& o) { return same_arc(o, moved); });
        if (!dup) out.arcs.push_back(moved);
      }
    }
  }
  out.bbox = compute_bbox(out);
  return out;
}

CurveSet scale_to_box(const CurveSet& curves, double target_side) {
  if (curves.empty()) throw ContractViolation("scale_to_box: empty curve set");
  if (!(target_side > 0.0) || !(curves.bbox.side > 0.0)) {
    throw ContractViolation("scale_to_box: sides must be > 0");
  }
  const double f = target_side / curves.bbox.side;
  const Point o = curves.bbox.origin;
  auto map = [&](Point p) { return f * (p - o); };
  CurveSet out;
  out.segments.reserve(curves.segments.size());
  for (const auto& s : curves.segments) out.segments.push_back({map(s.p0), map(s.p1)});
  out.arcs.reserve(curves.arcs.size());
  for (const auto& a : curves.arcs) {
    Arc b = a;
    b.center = map(a.center);
    b.radius = f * a.radius;
    out.arcs.push_back(b);
  }
  out.pitch = f * curves.pitch;
  out.bbox = {{0.0, 0.0}, target_side};
  return out;
}

GeomFeatures geometry_features(const CurveSet& curves, double thickness_mm) {
  if (!(thickness_mm > 0.0)) throw ContractViolation("geometry_features: thickness must be > 0");
  GeomFeatures f;
  f.total_length = curves.total_length();
  const double side = curves.bbox.side;
  if (!(side > 0.0)) throw ContractViolation("geometry_features: empty bounding box");
  f.relative_density = f.total_length * thickness_mm / (side * side);
  if (f.relative_density >= 1.0) {
    throw DomainError("degenerate geometry: relative density " +
                      std::to_string(f.relative_density) + " >= 1");
  }

  const double tol = 1e-7 * side;
  const auto lines = polylines(curves);

  std::vector<Point> candidates;
  for (const auto& line : lines) {
    candidates.push_back(line.points.front());
    candidates.push_back(line.points.back());
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      if (!lines[i].bounds.overlaps(lines[j].bounds, tol)) continue;
      const auto& a = lines[i].points;
      const auto& b = lines[j].points;
      for (std::size_t p = 0; p + 1 < a.size(); ++p) {
        for (std::size_t q = 0; q + 1 < b.size(); ++q) {
          segment_crossings(a[p], a[p + 1], b[q], b[q + 1], tol, candidates);
        }
      }
    }
  }

  std::vector<Point> nodes;
  for (const auto& c : candidates) {
    const bool known = std::any_of(nodes.begin(), nodes.end(),
                                   [&](const Point& n) { return norm(n - c) <= 10.0 * tol; });
    if (!known) nodes.push_back(c);
  }

  // Node degree: +1 per curve end at the node, +2 per curve passing through.
  std::vector<Point> junctions;
  for (const auto& node : nodes) {
    int degree = 0;
    for (const auto& line : lines) {
      if (!line.bounds.overlaps(Bounds{node.x, node.x, node.y, node.y}, 10.0 * tol)) continue;
      const int ends = (norm(line.points.front() - node) <= 10.0 * tol ? 1 : 0) +
                       (norm(line.points.back() - node) <= 10.0 * tol ? 1 : 0);
      if (ends > 0) {
        degree += ends;
      } else if (point_polyline_distance(node, line) <= 10.0 * tol) {
        degree += 2;
      }
    }
    if (degree >= 3) ++f.n_intersections;
    junctions.push_back(node);
  }

  for (const auto& line : lines) {
    if (!line.straight) continue;
    const Point a = line.points.front();
    const Point b = line.points.back();
    const Point ab = b - a;
    const double len = norm(ab);
    std::vector<double> cuts = {0.0, 1.0};
    for (const auto& node : junctions) {
      if (point_segment_distance(node, a, b) > 10.0 * tol) continue;
      const double t = dot(node - a, ab) / (len * len);
      if (t > 10.0 * tol / len && t < 1.0 - 10.0 * tol / len) cuts.push_back(t);
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      f.max_free_span = std::max(f.max_free_span, (cuts[k + 1] - cuts[k]) * len);
    }
  }
  return f;
}

CurveSet build_lattice(const DesignKey& key, const CellProportions& proportions) {
  const CurveSet cell = build_unit_cell(key, kLatticeBoxSideMm / kCellsPerSide, proportions);
  return scale_to_box(tessellate(cell, kCellsPerSide, kCellsPerSide), kLatticeBoxSideMm);
}

void write_curves(std::ostream& out, const CurveSet& curves) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "B %.17g %.17g %.17g %.17g\n", curves.bbox.origin.x,
                curves.bbox.origin.y, curves.bbox.side, curves.pitch);
  out << buf;
  for (const auto& s : curves.segments) {
    std::snprintf(buf, sizeof buf, "S %.17g %.17g %.17g %.17g\n", s.p0.x, s.p0.y, s.p1.x, s.p1.y);
    out << buf;
  }
  for (const auto& a : curves.arcs) {
    std::snprintf(buf, sizeof buf, "A %.17g %.17g %.17g %.17g %.17g\n", a.center.x, a.center.y,
                  a.radius, a.start_angle, a.sweep);
    out << buf;
  }
}

CurveSet read_curves(std::istream& in) {
  CurveSet out;
  bool have_box = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line.substr(first));
    char tag = 0;
    ls >> tag;
    auto fail = [&] {
      throw FormatError("curve file line " + std::to_string(line_no) + ": cannot parse '" +
                        line + "'");
    };
    if (tag == 'S') {
      Segment s;
      if (!(ls >> s.p0.x >> s.p0.y >> s.p1.x >> s.p1.y)) fail();
      out.segments.push_back(s);
    } else if (tag == 'A') {
      Arc a;
      if (!(ls >> a.center.x >> a.center.y >> a.radius >> a.start_angle >> a.sweep)) fail();
      if (!(a.radius > 0.0) || a.sweep == 0.0 || std::abs(a.sweep) > 2.0 * kPi + 1e-12) {
        throw DomainError("curve file line " + std::to_string(line_no) +
                          ": arc needs radius > 0 and 0 < |sweep| <= 2*pi");
      }
      out.arcs.push_back(a);
    } else if (tag == 'B') {
      if (!(ls >> out.bbox.origin.x >> out.bbox.origin.y >> out.bbox.side >> out.pitch)) fail();
      have_box = true;
    } else {
      fail();
    }
  }
  if (!have_box) out.bbox = compute_bbox(out);
  return out;
}

CurveSet load_curves(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open curve file '" + path + "'");
  return read_curves(in);
}

void save_curves(const std::string& path, const CurveSet& curves) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write curve file '" + path + "'");
  write_curves(out, curves);
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace lattice
