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
#include "render.hpp"

#include <algorithm>
#include <cmath>

namespace p2p::cli {

data::Image blank_image(int height, int width, float value) {
  return {height, width,
          std::vector<float>(static_cast<std::size_t>(height) * static_cast<std::size_t>(width),
                             value)};
}

data::Image resample(const std::vector<float>& grid, int gh, int gw, int height, int width) {
  data::Image out = blank_image(height, width);
  for (int y = 0; y < height; ++y) {
    const double gy = std::clamp((y + 0.5) * gh / height - 0.5, 0.0, gh - 1.0);
    const int y0 = static_cast<int>(gy), y1 = std::min(y0 + 1, gh - 1);
    const double fy = gy - y0;
    for (int x = 0; x < width; ++x) {
      const double gx = std::clamp((x + 0.5) * gw / width - 0.5, 0.0, gw - 1.0);
      const int x0 = static_cast<int>(gx), x1 = std::min(x0 + 1, gw - 1);
      const double fx = gx - x0;
      auto at = [&](int r, int c) { return static_cast<double>(grid[static_cast<std::size_t>(r * gw + c)]); };
      const double v = (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x1)) +
                       fy * ((1 - fx) * at(y1, x0) + fx * at(y1, x1));
      out.pixels[static_cast<std::size_t>(y * width + x)] = static_cast<float>(v);
    }
  }
  return out;
}

namespace {

void plot(data::Image& image, int x, int y, float value) {
  if (x < 0 || y < 0 || x >= image.width || y >= image.height) return;
  image.pixels[static_cast<std::size_t>(y) * image.width + x] = value;
}

}  // namespace

void draw_line(data::Image& image, geom::Point2 a, geom::Point2 b, float value) {
  const double len = std::max(std::abs(b.x - a.x), std::abs(b.y - a.y));
  const int steps = std::max(1, static_cast<int>(std::ceil(len * 2)));
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    plot(image, static_cast<int>(std::floor(a.x + t * (b.x - a.x))),
         static_cast<int>(std::floor(a.y + t * (b.y - a.y))), value);
  }
}

void draw_ring(data::Image& image, const geom::PolygonRing& ring, float value) {
  const auto& v = ring.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) draw_line(image, v[i], v[(i + 1) % v.size()], value);
}

void draw_box(data::Image& image, const data::BBox& box, float value) {
  const geom::Point2 c[4] = {{box.x0, box.y0}, {box.x1, box.y0}, {box.x1, box.y1}, {box.x0, box.y1}};
  for (int i = 0; i < 4; ++i) draw_line(image, c[i], c[(i + 1) % 4], value);
}

void draw_dot(data::Image& image, geom::Point2 p, int radius, float value) {
  const int cx = static_cast<int>(std::floor(p.x)), cy = static_cast<int>(std::floor(p.y));
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) plot(image, cx + dx, cy + dy, value);
  }
}

data::Image plot_curves(const std::vector<std::vector<std::pair<double, double>>>& curves,
                        int size) {
  data::Image img = blank_image(size, size, 1.0f);
  const double margin = 16, span = size - 2 * margin;
  auto map = [&](double x, double y) {
    return geom::Point2{margin + x * span, margin + (1.0 - y) * span};
  };
  draw_box(img, {margin, margin, margin + span, margin + span}, 0.6f);
  for (int k = 1; k < 10; ++k) {
    const double t = k / 10.0;
    draw_line(img, map(t, 0), map(t, -0.02), 0.6f);
    draw_line(img, map(0, t), map(-0.02, t), 0.6f);
  }
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const float shade = curves.size() > 1
                            ? 0.6f * static_cast<float>(c) / static_cast<float>(curves.size() - 1)
                            : 0.0f;
    const auto& pts = curves[c];
    for (std::size_t i = 1; i < pts.size(); ++i) {
      draw_line(img, map(pts[i - 1].first, pts[i - 1].second), map(pts[i].first, pts[i].second),
                shade);
    }
  }
  return img;
}

}  // namespace p2p::cli
