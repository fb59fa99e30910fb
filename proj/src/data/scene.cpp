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
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "p2p/common/error.hpp"
#include "p2p/common/hash.hpp"
#include "p2p/data/data.hpp"

namespace p2p::data {

using geom::Point2;
using geom::PolygonRing;

namespace {

constexpr int kMaxAttempts = 1000;
constexpr int kPlacementTries = 50;
constexpr double kMargin = 2.0;
constexpr double kGap = 3.0;
constexpr int kSuper = 4;

// Axis-aligned rectangle (screen-clockwise from the top-left corner) with
// rectangular notches cut from `notches` distinct corners.
std::vector<Point2> notched_rectangle(std::mt19937_64& rng, double w, double h, int notches) {
  const std::array<Point2, 4> rect{Point2{0, 0}, Point2{w, 0}, Point2{w, h}, Point2{0, h}};
  std::array<int, 4> corners{0, 1, 2, 3};
  std::shuffle(corners.begin(), corners.end(), rng);
  std::array<bool, 4> cut{};
  for (int i = 0; i < notches; ++i) cut[corners[i]] = true;

  std::uniform_real_distribution<double> frac(0.2, 0.45);
  std::vector<Point2> pts;
  for (int i = 0; i < 4; ++i) {
    const Point2 p = rect[i];
    if (!cut[i]) {
      pts.push_back(p);
      continue;
    }
    const Point2 prev = rect[(i + 3) % 4];
    const Point2 next = rect[(i + 1) % 4];
    const Point2 to_prev = prev - p;
    const Point2 to_next = next - p;
    const double fb = frac(rng), fa = frac(rng);
    const Point2 a = p + fb * to_prev;
    const Point2 c = p + fa * to_next;
    pts.push_back(a);
    pts.push_back(a + fa * to_next);
    pts.push_back(c);
  }
  return pts;
}

bool overlaps(const BBox& a, const BBox& b, double gap) {
  return a.x0 < b.x1 + gap && b.x0 < a.x1 + gap && a.y0 < b.y1 + gap && b.y0 < a.y1 + gap;
}

void composite(std::vector<float>& canvas, const std::vector<float>& coverage, float value) {
  for (std::size_t i = 0; i < canvas.size(); ++i) {
    canvas[i] = canvas[i] * (1.0f - coverage[i]) + value * coverage[i];
  }
}

std::vector<float> disc_coverage(Point2 c, double r, int height, int width) {
  std::vector<float> cov(static_cast<std::size_t>(height) * width, 0.0f);
  const int y0 = std::max(0, static_cast<int>(std::floor(c.y - r)));
  const int y1 = std::min(height - 1, static_cast<int>(std::floor(c.y + r)));
  const int x0 = std::max(0, static_cast<int>(std::floor(c.x - r)));
  const int x1 = std::min(width - 1, static_cast<int>(std::floor(c.x + r)));
  const float w = 1.0f / (kSuper * kSuper);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      int hits = 0;
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          const double dx = x + (sx + 0.5) / kSuper - c.x;
          const double dy = y + (sy + 0.5) / kSuper - c.y;
          hits += dx * dx + dy * dy <= r * r;
        }
      }
      cov[static_cast<std::size_t>(y) * width + x] = hits * w;
    }
  }
  return cov;
}

}  // namespace

BBox bounds_of(const PolygonRing& ring) {
  BBox b{ring[0].x, ring[0].y, ring[0].x, ring[0].y};
  for (const Point2& p : ring.vertices()) {
    b.x0 = std::min(b.x0, p.x);
    b.y0 = std::min(b.y0, p.y);
    b.x1 = std::max(b.x1, p.x);
    b.y1 = std::max(b.y1, p.y);
  }
  return b;
}

void SceneConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInput, "scene config: " + msg); };
  if (image_size < 64) fail("image_size must be at least 64");
  if (min_buildings < 0 || max_buildings < min_buildings) fail("empty buildings range");
  if (min_vertices < 4 || max_vertices > 12 || max_vertices < min_vertices) {
    fail("vertex range must lie in [4, 12]");
  }
  if ((min_vertices + 1) / 2 * 2 > max_vertices) fail("vertex range holds no even count");
  if (max_rotation_deg < min_rotation_deg) fail("empty rotation range");
  if (occlusion_rate < 0.0 || occlusion_rate > 1.0) fail("occlusion_rate outside [0, 1]");
  if (texture_noise < 0.0) fail("negative texture_noise");
  if (min_building_size < 4.0 || max_building_size < min_building_size) {
    fail("invalid building size range");
  }
  if (max_building_size > image_size - 2 * kMargin) fail("buildings larger than the image");
}

std::vector<float> ring_coverage(const PolygonRing& ring, int height, int width) {
  std::vector<float> cov(static_cast<std::size_t>(height) * width, 0.0f);
  const BBox b = bounds_of(ring);
  const int y0 = std::max(0, static_cast<int>(std::floor(b.y0)));
  const int y1 = std::min(height - 1, static_cast<int>(std::floor(b.y1)));
  const float w = 1.0f / (kSuper * kSuper);
  const int sub_w = width * kSuper;
  for (int y = y0; y <= y1; ++y) {
    for (int sy = 0; sy < kSuper; ++sy) {
      const std::vector<double> xs =
          geom::scanline_crossings(ring, y + (sy + 0.5) / kSuper);
      for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
        // Sub-sample s sits at (s + 0.5) / kSuper; count those in [xa, xb).
        const int s0 = std::max(0, static_cast<int>(std::ceil(xs[i] * kSuper - 0.5)));
        const int s1 =
            std::min(sub_w, static_cast<int>(std::ceil(xs[i + 1] * kSuper - 0.5)));
        for (int s = s0; s < s1; ++s) {
          cov[static_cast<std::size_t>(y) * width + s / kSuper] += w;
        }
      }
    }
  }
  return cov;
}

Scene generate_scene(const SceneConfig& config, std::int64_t index) {
  config.validate();
  std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(index)));
  const double size = config.image_size;
  std::uniform_int_distribution<int> count_dist(config.min_buildings, config.max_buildings);
  std::uniform_int_distribution<int> vert_dist((config.min_vertices + 1) / 2,
                                               config.max_vertices / 2);
  std::uniform_real_distribution<double> side(config.min_building_size, config.max_building_size);
  std::uniform_real_distribution<double> rot(config.min_rotation_deg, config.max_rotation_deg);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution occlude(config.occlusion_rate);

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const int count = count_dist(rng);
    std::vector<Annotation> anns;
    bool failed = false;
    for (int b = 0; b < count && !failed; ++b) {
      bool placed = false;
      for (int t = 0; t < kPlacementTries && !placed; ++t) {
        const int vertices = 2 * vert_dist(rng);
        const double w = side(rng), h = side(rng);
        std::vector<Point2> pts = notched_rectangle(rng, w, h, (vertices - 4) / 2);
        const double theta = rot(rng) * std::numbers::pi / 180.0;
        const double ct = std::cos(theta), st = std::sin(theta);
        for (Point2& p : pts) {
          const Point2 q = p - Point2{w / 2, h / 2};
          p = {ct * q.x - st * q.y, st * q.x + ct * q.y};
        }
        PolygonRing centred = geom::normalize_ring(pts);
        const BBox cb = bounds_of(centred);
        const double free_x = size - 2 * kMargin - cb.width();
        const double free_y = size - 2 * kMargin - cb.height();
        if (free_x <= 0 || free_y <= 0) continue;
        const Point2 offset{kMargin - cb.x0 + unit(rng) * free_x,
                            kMargin - cb.y0 + unit(rng) * free_y};
        PolygonRing ring = geom::translated(centred, offset);
        const BBox bb = bounds_of(ring);
        const bool clash = std::any_of(anns.begin(), anns.end(), [&](const Annotation& a) {
          return overlaps(a.bbox, bb, kGap);
        });
        if (clash) continue;
        anns.push_back(Annotation{std::move(ring), bb, false});
        placed = true;
      }
      failed = !placed;
    }
    if (failed) continue;

    Scene scene;
    const int n = config.image_size;
    scene.image.height = scene.image.width = n;
    std::vector<float>& px = scene.image.pixels;
    px.assign(static_cast<std::size_t>(n) * n, 0.0f);
    const double bg = 0.1 + 0.25 * unit(rng);
    const double gx = 0.1 * (unit(rng) - 0.5), gy = 0.1 * (unit(rng) - 0.5);
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        px[static_cast<std::size_t>(y) * n + x] =
            static_cast<float>(bg + gx * (x / size - 0.5) + gy * (y / size - 0.5));
      }
    }
    for (Annotation& a : anns) {
      const float roof = static_cast<float>(0.55 + 0.35 * unit(rng));
      composite(px, ring_coverage(a.ring, n, n), roof);
    }
    for (Annotation& a : anns) {
      a.occluded = occlude(rng);
      if (!a.occluded) continue;
      std::uniform_int_distribution<std::size_t> pick(0, a.ring.size() - 1);
      const Point2 c = a.ring[pick(rng)];
      const double r = 3.0 + 4.0 * unit(rng);
      const float shade = static_cast<float>(0.05 + 0.25 * unit(rng));
      composite(px, disc_coverage(c, r, n, n), shade);
    }
    std::normal_distribution<double> noise(0.0, config.texture_noise);
    for (float& v : px) {
      const double noisy = config.texture_noise > 0 ? v + noise(rng) : v;
      v = static_cast<float>(std::round(std::clamp(noisy, 0.0, 1.0) * 255.0) / 255.0);
    }
    scene.annotations = std::move(anns);
    return scene;
  }
  throw Error(ErrorCode::kGenerationFailure,
              "scene " + std::to_string(index) + ": no valid layout after " +
                  std::to_string(kMaxAttempts) + " attempts");
}

}  // namespace p2p::data
