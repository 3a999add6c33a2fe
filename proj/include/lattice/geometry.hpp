#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lattice/keyspace.hpp"

namespace lattice {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Segment {
  Point p0;
  Point p1;
};

/// Circular arc from `start_angle` through `sweep` radians (signed,
/// counter-clockwise positive). A full circle has |sweep| = 2*pi.
struct Arc {
  Point center;
  double radius = 0.0;
  double start_angle = 0.0;
  double sweep = 0.0;

  Point point_at(double angle) const;
  Point start() const { return point_at(start_angle); }
  Point end() const { return point_at(start_angle + sweep); }
  double length() const;
};

/// Square region [origin, origin + side]^2.
struct Box {
  Point origin;
  double side = 0.0;
};

/// Skeleton of a lattice cross-section in mm.
///
/// `bbox` is the smallest square enclosing every curve, centred on the
/// curve extent along the shorter axis. `pitch` is the tiling period of
/// the unit cell the set was built from (0 for free-form sets).
struct CurveSet {
  std::vector<Segment> segments;
  std::vector<Arc> arcs;
  Box bbox;
  double pitch = 0.0;

  bool empty() const { return segments.empty() && arcs.empty(); }
  double total_length() const;
};

/// Proportions of the unit-cell construction, as fractions of the cell side
/// (corner offset, interior circle radius) or of an edge segment (two-arc
/// radius, which is also its bulge).
struct CellProportions {
  double corner_offset = 1.0 / 6.0;
  double arc_bulge = 1.0 / 4.0;
  double circle_radius = 1.0 / 4.0;
};

struct GeomFeatures {
  double total_length = 0.0;      // mm
  double relative_density = 0.0;  // total_length * thickness / side^2
  double max_free_span = 0.0;     // mm, longest straight run between junctions
  int n_intersections = 0;
};

// Arcs are discretized with this many polyline points per full turn for
// intersection tests.
inline constexpr int kArcPointsPerTurn = 64;
inline constexpr double kCurveMatchTolerance = 1e-9;

/// Skeleton of one unit cell occupying [0, cell_side]^2.
/// Throws ContractViolation for non-canonical keys or cell_side <= 0.
CurveSet build_unit_cell(const DesignKey& key, double cell_side,
                         const CellProportions& proportions = {});

/// nx-by-ny grid of translated copies with coincident curves removed.
/// Only square grids are supported.
CurveSet tessellate(const CurveSet& cell, int nx, int ny);

/// Translates the bbox origin to (0,0) and scales uniformly so the bbox side
/// equals `target_side`.
CurveSet scale_to_box(const CurveSet& curves, double target_side);

/// Recomputes the square bounding box from the curve extent.
Box compute_bbox(const CurveSet& curves);

/// Throws DomainError when relative density reaches 1.
GeomFeatures geometry_features(const CurveSet& curves, double thickness_mm);

inline constexpr double kLatticeBoxSideMm = 20.0;
inline constexpr int kCellsPerSide = 2;

/// 2x2 tessellation of the key's cell scaled to the 20 mm box.
CurveSet build_lattice(const DesignKey& key, const CellProportions& proportions = {});

/// Line format: `S x0 y0 x1 y1` and `A cx cy r a0 sweep`; an optional
/// `B ox oy side pitch` line carries the box. Blank lines and `#` comments
/// are ignored on read.
void write_curves(std::ostream& out, const CurveSet& curves);
CurveSet read_curves(std::istream& in);
CurveSet load_curves(const std::string& path);
void save_curves(const std::string& path, const CurveSet& curves);

}  // namespace lattice
