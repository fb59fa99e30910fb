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
#include "p2p/geom/geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "p2p/common/error.hpp"

namespace p2p::geom {

double squared_distance(Point2 a, Point2 b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

double distance(Point2 a, Point2 b) { return std::sqrt(squared_distance(a, b)); }

namespace {

bool near_equal(Point2 a, Point2 b) {
  return std::abs(a.x - b.x) <= kDuplicateTolerance &&
         std::abs(a.y - b.y) <= kDuplicateTolerance;
}

double shoelace_sum(std::span<const Point2> v) {
  double s = 0.0;
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = v[i];
    const Point2& b = v[(i + 1) % n];
    s += a.x * b.y - b.x * a.y;
  }
  return s;
}

}  // namespace

PolygonRing normalize_ring(std::span<const Point2> raw) {
  std::vector<Point2> v;
  v.reserve(raw.size());
  for (const Point2& p : raw) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorCode::kDegenerateRing, "non-finite vertex coordinate");
    }
    if (v.empty() || !near_equal(v.back(), p)) v.push_back(p);
  }
  while (v.size() > 1 && near_equal(v.front(), v.back())) v.pop_back();
  if (v.size() < 3) {
    throw Error(ErrorCode::kDegenerateRing,
                "ring has " + std::to_string(v.size()) + " distinct vertices");
  }
  const double s = shoelace_sum(v);
  if (s == 0.0) throw Error(ErrorCode::kDegenerateRing, "ring has zero area");
  if (s < 0.0) std::reverse(v.begin() + 1, v.end());
  return PolygonRing(std::move(v));
}

double signed_area(std::span<const Point2> vertices) {
  return 0.5 * shoelace_sum(vertices);
}

double perimeter(const PolygonRing& ring) {
  double p = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) p += distance(ring[i], ring[(i + 1) % n]);
  return p;
}

std::vector<double> scanline_crossings(const PolygonRing& ring, double y) {
  std::vector<double> xs;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = ring[i];
    const Point2 b = ring[(i + 1) % n];
    const double lo = std::min(a.y, b.y), hi = std::max(a.y, b.y);
    if (y < lo || y >= hi) continue;
    xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
  }
  std::sort(xs.begin(), xs.end());
  return xs;
}

Point2 centroid(const PolygonRing& ring) {
  // Area centroid, accumulated relative to vertex 0 for conditioning.
  const Point2 o = ring[0];
  double a2 = 0.0, cx = 0.0, cy = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 p = ring[i] - o;
    const Point2 q = ring[(i + 1) % n] - o;
    const double cross = p.x * q.y - q.x * p.y;
    a2 += cross;
    cx += (p.x + q.x) * cross;
    cy += (p.y + q.y) * cross;
  }
  return {o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2)};
}

PolygonRing translated(const PolygonRing& ring, Point2 offset) {
  std::vector<Point2> v(ring.vertices().begin(), ring.vertices().end());
  for (Point2& p : v) p = p + offset;
  return normalize_ring(v);
}

bool equal_up_to_rotation(const PolygonRing& a, const PolygonRing& b,
                          double tol) {
  const std::size_t n = a.size();
  if (n != b.size()) return false;
  for (std::size_t shift = 0; shift < n; ++shift) {
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      const Point2& p = a[i];
      const Point2& q = b[(i + shift) % n];
      ok = std::abs(p.x - q.x) <= tol && std::abs(p.y - q.y) <= tol;
    }
    if (ok) return true;
  }
  return false;
}

std::string_view to_string(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::kVertex: return "vertex";
    case PrimitiveKind::kLine: return "line";
    case PrimitiveKind::kCorner: return "corner";
  }
  return "vertex";
}

PrimitiveKind primitive_kind_from_string(std::string_view name) {
  if (name == "vertex") return PrimitiveKind::kVertex;
  if (name == "line") return PrimitiveKind::kLine;
  if (name == "corner") return PrimitiveKind::kCorner;
  throw Error(ErrorCode::kInput, "unknown primitive kind '" + std::string(name) + "'");
}

Point2 anchor_of(PrimitiveKind kind, std::span<const Point2> points) {
  switch (kind) {
    case PrimitiveKind::kVertex: return points[0];
    case PrimitiveKind::kLine: return 0.5 * (points[0] + points[1]);
    case PrimitiveKind::kCorner: return points[1];
  }
  return points[0];
}

Primitive make_primitive(PrimitiveKind kind, std::span<const Point2> points) {
  const auto n = static_cast<std::size_t>(points_per_primitive(kind));
  if (points.size() != n) {
    throw Error(ErrorCode::kShape, "primitive of kind " + std::string(to_string(kind)) +
                                       " needs " + std::to_string(n) + " points");
  }
  Primitive p;
  p.kind = kind;
  std::copy(points.begin(), points.end(), p.points.begin());
  p.anchor = anchor_of(kind, points);
  return p;
}

namespace {

struct ArcTable {
  std::vector<double> cumulative;  // size V + 1
  double total = 0.0;
};

ArcTable arc_table(const PolygonRing& ring) {
  ArcTable t;
  const std::size_t n = ring.size();
  t.cumulative.resize(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    t.cumulative[i + 1] = t.cumulative[i] + distance(ring[i], ring[(i + 1) % n]);
  }
  t.total = t.cumulative[n];
  return t;
}

Point2 point_at(const PolygonRing& ring, const ArcTable& table, double s) {
  const std::size_t n = ring.size();
  auto it = std::upper_bound(table.cumulative.begin(), table.cumulative.end(), s);
  std::size_t e = static_cast<std::size_t>(std::max<std::ptrdiff_t>(
      0, std::distance(table.cumulative.begin(), it) - 1));
  if (e >= n) e = n - 1;
  // Skip zero-length edges.
  while (table.cumulative[e + 1] - table.cumulative[e] <= 0.0 && e + 1 < n) ++e;
  const double len = table.cumulative[e + 1] - table.cumulative[e];
  const double t = len > 0.0 ? std::clamp((s - table.cumulative[e]) / len, 0.0, 1.0) : 0.0;
  const Point2 a = ring[e];
  const Point2 b = ring[(e + 1) % n];
  return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
}

}  // namespace

Point2 twelve_oclock_point(const PolygonRing& ring, double* arc_position) {
  const Point2 c = centroid(ring);
  const ArcTable table = arc_table(ring);
  const std::size_t n = ring.size();

  double best_gap = std::numeric_limits<double>::infinity();
  Point2 best{};
  double best_arc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = ring[i];
    const Point2 b = ring[(i + 1) % n];
    double hit_y;
    if (a.x == b.x) {
      if (a.x != c.x) continue;
      const double lo = std::min(a.y, b.y);
      if (lo > c.y) continue;
      hit_y = std::min(c.y, std::max(a.y, b.y));
    } else {
      const double t = (c.x - a.x) / (b.x - a.x);
      if (t < 0.0 || t > 1.0) continue;
      hit_y = a.y + t * (b.y - a.y);
      if (hit_y > c.y) continue;
    }
    const double gap = c.y - hit_y;
    if (gap < best_gap) {
      best_gap = gap;
      best = {c.x, hit_y};
      best_arc = table.cumulative[i] + distance(a, best);
    }
  }
  if (!std::isfinite(best_gap)) {
    // Ray misses the boundary: take the topmost vertex nearest the centroid
    // column.
    std::size_t pick = 0;
    for (std::size_t i = 1; i < n; ++i) {
      const Point2 p = ring[i];
      const Point2 q = ring[pick];
      if (p.y < q.y || (p.y == q.y && std::abs(p.x - c.x) < std::abs(q.x - c.x))) pick = i;
    }
    best = ring[pick];
    best_arc = table.cumulative[pick];
  }
  if (arc_position != nullptr) *arc_position = best_arc;
  return best;
}

SampledContour sample_contour(const PolygonRing& ring, int n_order) {
  if (n_order < 3) {
    throw Error(ErrorCode::kInput, "n_order must be at least 3");
  }
  const ArcTable table = arc_table(ring);
  if (!(table.total > 0.0)) {
    throw Error(ErrorCode::kDegenerateRing, "zero-perimeter ring");
  }
  double start = 0.0;
  twelve_oclock_point(ring, &start);

  SampledContour out;
  out.perimeter = table.total;
  out.points.reserve(static_cast<std::size_t>(n_order));
  out.arc_positions.reserve(static_cast<std::size_t>(n_order));
  const double step = table.total / n_order;
  for (int k = 0; k < n_order; ++k) {
    double s = start + k * step;
    if (s >= table.total) s -= table.total;
    out.arc_positions.push_back(s);
    out.points.push_back(point_at(ring, table, s));
  }
  return out;
}

std::vector<Primitive> extract_primitives(const PolygonRing& ring,
                                          PrimitiveKind kind) {
  const std::size_t n = ring.size();
  std::vector<Primitive> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 prev = ring[(i + n - 1) % n];
    const Point2 cur = ring[i];
    const Point2 next = ring[(i + 1) % n];
    switch (kind) {
      case PrimitiveKind::kVertex: {
        const std::array<Point2, 1> p{cur};
        out.push_back(make_primitive(kind, p));
        break;
      }
      case PrimitiveKind::kLine: {
        const std::array<Point2, 2> p{cur, next};
        out.push_back(make_primitive(kind, p));
        break;
      }
      case PrimitiveKind::kCorner: {
        const std::array<Point2, 3> p{prev, cur, next};
        out.push_back(make_primitive(kind, p));
        break;
      }
    }
  }
  return out;
}

OrderedPrimitiveSet assign_orders(std::span<const Primitive> primitives,
                                  const SampledContour& sampled) {
  if (primitives.empty()) {
    throw Error(ErrorCode::kInsufficientPrimitives, "no primitives to order");
  }
  const std::size_t m = primitives.size();
  const std::size_t k_count = sampled.points.size();

  // Best (distance, sample index) per primitive among samples voting for it.
  std::vector<double> best_d(m, std::numeric_limits<double>::infinity());
  std::vector<int> best_k(m, -1);
  for (std::size_t k = 0; k < k_count; ++k) {
    const Point2 s = sampled.points[k];
    std::size_t owner = 0;
    double owner_d = squared_distance(s, primitives[0].anchor);
    for (std::size_t j = 1; j < m; ++j) {
      const double d = squared_distance(s, primitives[j].anchor);
      if (d < owner_d) {
        owner_d = d;
        owner = j;
      }
    }
    if (owner_d < best_d[owner]) {
      best_d[owner] = owner_d;
      best_k[owner] = static_cast<int>(k);
    }
  }

  OrderedPrimitiveSet out;
  out.primitives.assign(primitives.begin(), primitives.end());
  out.orders.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    if (best_k[j] < 0) {
      double d_min = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < k_count; ++k) {
        const double d = squared_distance(sampled.points[k], primitives[j].anchor);
        if (d < d_min) {
          d_min = d;
          best_k[j] = static_cast<int>(k);
        }
      }
    }
    out.orders[j] = best_k[j];
  }
  return out;
}

namespace {

struct OrientedLine {
  Point2 start;
  Point2 end;
};

// Greedy orientation pass seeded with a fixed orientation for the first line.
// Returns the total junction cost including the closing junction.
double orient_lines(std::span<const Primitive> lines, bool flip_seed,
                    std::vector<OrientedLine>& out) {
  out.clear();
  const Primitive& seed = lines[0];
  out.push_back(flip_seed ? OrientedLine{seed.points[1], seed.points[0]}
                          : OrientedLine{seed.points[0], seed.points[1]});
  double cost = 0.0;
  for (std::size_t j = 1; j < lines.size(); ++j) {
    const Point2 tail = out.back().end;
    const OrientedLine fwd{lines[j].points[0], lines[j].points[1]};
    const OrientedLine rev{lines[j].points[1], lines[j].points[0]};
    const double df = distance(tail, fwd.start);
    const double dr = distance(tail, rev.start);
    if (dr < df) {
      out.push_back(rev);
      cost += dr;
    } else {
      out.push_back(fwd);
      cost += df;
    }
  }
  cost += distance(out.back().end, out.front().start);
  return cost;
}

}  // namespace

PolygonRing assemble_polygon(const OrderedPrimitiveSet& set, PrimitiveKind kind) {
  const std::size_t m = set.primitives.size();
  if (set.orders.size() != m ||
      (!set.confidences.empty() && set.confidences.size() != m)) {
    throw Error(ErrorCode::kShape, "primitive, order and confidence counts differ");
  }
  if (m < 3) {
    throw Error(ErrorCode::kInsufficientPrimitives,
                std::to_string(m) + " primitives, need at least 3");
  }
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (set.orders[a] != set.orders[b]) return set.orders[a] < set.orders[b];
    if (!set.confidences.empty() && set.confidences[a] != set.confidences[b]) {
      return set.confidences[a] > set.confidences[b];
    }
    return a < b;
  });
  std::vector<Primitive> sorted;
  sorted.reserve(m);
  for (std::size_t i : idx) sorted.push_back(set.primitives[i]);

  std::vector<Point2> ring;
  ring.reserve(m);
  switch (kind) {
    case PrimitiveKind::kVertex:
      for (const Primitive& p : sorted) ring.push_back(p.points[0]);
      break;
    case PrimitiveKind::kCorner:
      for (const Primitive& p : sorted) ring.push_back(p.points[1]);
      break;
    case PrimitiveKind::kLine: {
      std::vector<OrientedLine> a, b;
      const double cost_a = orient_lines(sorted, false, a);
      const double cost_b = orient_lines(sorted, true, b);
      const std::vector<OrientedLine>& lines = cost_b < cost_a ? b : a;
      for (std::size_t j = 0; j < m; ++j) {
        const Point2 e = lines[j].end;
        const Point2 s = lines[(j + 1) % m].start;
        ring.push_back({(e.x + s.x) / 2.0, (e.y + s.y) / 2.0});
      }
      break;
    }
  }
  return normalize_ring(ring);
}

}  // namespace p2p::geom
