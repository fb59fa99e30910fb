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

// Grayscale raster drawing for inspection and plot outputs.

#include <utility>
#include <vector>

#include "p2p/data/data.hpp"

namespace p2p::cli {

data::Image blank_image(int height, int width, float value = 0.0f);
// Bilinear resampling of a gh x gw grid onto height x width pixel centres.
data::Image resample(const std::vector<float>& grid, int gh, int gw, int height, int width);
void draw_line(data::Image& image, geom::Point2 a, geom::Point2 b, float value);
void draw_ring(data::Image& image, const geom::PolygonRing& ring, float value);
void draw_box(data::Image& image, const data::BBox& box, float value);
void draw_dot(data::Image& image, geom::Point2 p, int radius, float value);
// Unit-square line plot with a frame; curves are (x, y) polylines.
data::Image plot_curves(const std::vector<std::vector<std::pair<double, double>>>& curves,
                        int size);

}  // namespace p2p::cli
