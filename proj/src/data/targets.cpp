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

#include "p2p/common/error.hpp"
#include "p2p/data/data.hpp"

namespace p2p::data {

RoiSpec make_roi(const BBox& bbox, double expansion, int width, int height,
                 std::mt19937_64* jitter) {
  if (!(bbox.width() > 0.0) || !(bbox.height() > 0.0)) {
    throw Error(ErrorCode::kDegenerateBox, "bounding box has zero area");
  }
  if (!(expansion >= 1.0)) throw Error(ErrorCode::kInput, "expansion ratio below 1");
  double ratio = expansion;
  if (jitter != nullptr) {
    std::uniform_real_distribution<double> dist(1.0, (expansion - 1.0) * 2.0 + 1.0);
    ratio = dist(*jitter);
  }
  const double cx = 0.5 * (bbox.x0 + bbox.x1), cy = 0.5 * (bbox.y0 + bbox.y1);
  const double hw = 0.5 * bbox.width() * ratio, hh = 0.5 * bbox.height() * ratio;
  RoiSpec roi;
  roi.expansion = ratio;
  roi.box = {std::max(0.0, cx - hw), std::max(0.0, cy - hh),
             std::min(static_cast<double>(width), cx + hw),
             std::min(static_cast<double>(height), cy + hh)};
  if (!(roi.box.width() > 0.0) || !(roi.box.height() > 0.0)) {
    throw Error(ErrorCode::kDegenerateBox, "ROI lies outside the image");
  }
  return roi;
}

geom::Point2 to_roi(const RoiSpec& roi, geom::Point2 p) {
  return {(p.x - roi.box.x0) / roi.box.width(), (p.y - roi.box.y0) / roi.box.height()};
}

geom::Point2 from_roi(const RoiSpec& roi, geom::Point2 p) {
  return {roi.box.x0 + p.x * roi.box.width(), roi.box.y0 + p.y * roi.box.height()};
}

TrainingTarget make_targets(const Annotation& annotation, const RoiSpec& roi,
                            geom::PrimitiveKind kind, int n_order) {
  constexpr double kTol = 1e-9;
  for (const geom::Point2& p : annotation.ring.vertices()) {
    if (p.x < roi.box.x0 - kTol || p.x > roi.box.x1 + kTol || p.y < roi.box.y0 - kTol ||
        p.y > roi.box.y1 + kTol) {
      throw Error(ErrorCode::kTargetConstruction, "ring extends outside its ROI");
    }
  }
  if (static_cast<int>(annotation.ring.size()) > n_order) {
    throw Error(ErrorCode::kTargetConstruction,
                "ring has " + std::to_string(annotation.ring.size()) + " vertices, more than " +
                    std::to_string(n_order) + " order classes");
  }
  const std::vector<geom::Primitive> prims = geom::extract_primitives(annotation.ring, kind);
  const geom::OrderedPrimitiveSet ordered =
      geom::assign_orders(prims, geom::sample_contour(annotation.ring, n_order));

  TrainingTarget t;
  t.orders = ordered.orders;
  for (const geom::Primitive& p : prims) {
    std::array<geom::Point2, 3> pts{};
    const auto src = p.pts();
    for (std::size_t i = 0; i < src.size(); ++i) {
      const geom::Point2 q = to_roi(roi, src[i]);
      pts[i] = {std::clamp(q.x, 0.0, 1.0), std::clamp(q.y, 0.0, 1.0)};
    }
    t.primitives.push_back(geom::make_primitive(kind, {pts.data(), src.size()}));
  }
  return t;
}

}  // namespace p2p::data
