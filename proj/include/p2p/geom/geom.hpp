// Copyright 2026 The p2p Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// Rings, primitives, contour sampling, order labels and primitive-to-polygon
// assembly. All coordinates are image pixels with +x right and +y down.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace p2p::geom {

inline constexpr double kDuplicateTolerance = 1e-9;
inline constexpr double kMinEdgeLength = 1e-6;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }

double distance(Point2 a, Point2 b);
double squared_distance(Point2 a, Point2 b);

// A closed contour whose orientation is screen-clockwise: the shoelace sum is
// strictly positive in the y-down frame. Only normalize_ring() creates one.
class PolygonRing {
 public:
  PolygonRing() = default;

  std::span<const Point2> vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  const Point2& operator[](std::size_t i) const { return vertices_[i]; }

  friend bool operator==(const PolygonRing&, const PolygonRing&) = default;

 private:
  friend PolygonRing normalize_ring(std::span<const Point2> raw);
  explicit PolygonRing(std::vector<Point2> v) : vertices_(std::move(v)) {}

  std::vector<Point2> vertices_;
};

// Drops consecutive duplicates (including the closing one) and reverses the
// traversal if the shoelace sum is not positive. Throws kDegenerateRing when
// fewer than three distinct vertices remain or the ring has no area.
PolygonRing normalize_ring(std::span<const Point2> raw);

double signed_area(std::span<const Point2> vertices);
inline double signed_area(const PolygonRing& ring) {
  return signed_area(ring.vertices());
}
double perimeter(const PolygonRing& ring);
Point2 centroid(const PolygonRing& ring);
PolygonRing translated(const PolygonRing& ring, Point2 offset);

// Sorted x positions where the horizontal line at `y` crosses the ring
// boundary. An edge counts when y lies in [min(y_a, y_b), max(y_a, y_b)), so
// horizontal edges never count and shared vertices count once.
std::vector<double> scanline_crossings(const PolygonRing& ring, double y);

// True when `b` equals `a` up to a cyclic rotation of the vertex list, with
// per-coordinate tolerance `tol` (0 = exact).
bool equal_up_to_rotation(const PolygonRing& a, const PolygonRing& b,
                          double tol = 0.0);

enum class PrimitiveKind { kVertex = 1, kLine = 2, kCorner = 3 };

constexpr int points_per_primitive(PrimitiveKind kind) {
  return static_cast<int>(kind);
}
std::string_view to_string(PrimitiveKind kind);
PrimitiveKind primitive_kind_from_string(std::string_view name);

// A vertex (1 point), line (2 points) or corner (3 points, points[1] being the
// corner vertex and the outer points its ring neighbours).
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::kVertex;
  std::array<Point2, 3> points{};
  Point2 anchor{};

  std::span<const Point2> pts() const {
    return {points.data(), static_cast<std::size_t>(points_per_primitive(kind))};
  }
};

Primitive make_primitive(PrimitiveKind kind, std::span<const Point2> points);
Point2 anchor_of(PrimitiveKind kind, std::span<const Point2> points);

struct OrderedPrimitiveSet {
  std::vector<Primitive> primitives;
  std::vector<int> orders;
  // Optional per-primitive confidence used to break duplicate orders.
  std::vector<double> confidences;
};

struct SampledContour {
  std::vector<Point2> points;
  // Arc-length position of each sample measured from ring vertex 0.
  std::vector<double> arc_positions;
  double perimeter = 0.0;
};

// Position on the boundary where the upward (-y) ray from the area centroid
// meets the ring, nearest to the centroid. Falls back to the topmost boundary
// point (closest in x to the centroid) if the ray misses the ring.
Point2 twelve_oclock_point(const PolygonRing& ring, double* arc_position);

// n_order points at uniform arc-length spacing, screen-clockwise, starting at
// twelve_oclock_point().
SampledContour sample_contour(const PolygonRing& ring, int n_order);

std::vector<Primitive> extract_primitives(const PolygonRing& ring,
                                          PrimitiveKind kind);

// Each sample votes for its nearest primitive anchor; a primitive takes the
// index of the closest sample among its voters, or of the globally nearest
// sample if nothing voted for it. Ties go to the lower index.
OrderedPrimitiveSet assign_orders(std::span<const Primitive> primitives,
                                  const SampledContour& sampled);

// Sorts by (order asc, confidence desc, input index) and connects the
// representative points. Throws kInsufficientPrimitives below 3 primitives.
PolygonRing assemble_polygon(const OrderedPrimitiveSet& set, PrimitiveKind kind);

}  // namespace p2p::geom
