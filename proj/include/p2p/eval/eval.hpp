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

// Polygon rasterization, mask IoU and COCO-style instance AP/AR.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "p2p/data/data.hpp"
#include "p2p/geom/geom.hpp"

namespace p2p::eval {

struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;  // row-major, 0 or 1

  std::int64_t area() const;
  bool at(int y, int x) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
};

// Even-odd scanline fill sampled at pixel centres (x + 0.5, y + 0.5).
Mask rasterize(const geom::PolygonRing& ring, int height, int width);

// |a and b| / |a or b|, 0 for an empty union.
double mask_iou(const Mask& a, const Mask& b);

struct InstancePrediction {
  std::int64_t id = -1;  // optional; explicit ids must be unique
  std::int64_t image_id = 0;
  geom::PolygonRing ring;
  double score = 0.0;
};

struct EvalOptions {
  std::vector<double> iou_thresholds;  // empty: 0.50:0.05:0.95
  int max_detections = 100;
};

struct MetricsReport {
  double map = 0.0;
  double ap50 = 0.0;
  double ap75 = 0.0;
  double ar = 0.0;  // AR@max_detections
  int max_detections = 100;
  std::vector<double> iou_thresholds;
  std::vector<double> recall_thresholds;    // 101 points
  std::vector<double> ap_per_threshold;     // -1 when there is no ground truth
  std::vector<double> recall_per_threshold;
  std::vector<std::vector<double>> precision;  // [threshold][recall point]
  std::int64_t images = 0;
  std::int64_t predictions = 0;
  std::int64_t ground_truth = 0;
};

std::vector<double> coco_iou_thresholds();
std::vector<double> coco_recall_thresholds();

// COCO instance-segmentation protocol on rasterized masks, single category,
// no crowd regions, all areas.
MetricsReport evaluate(std::span<const InstancePrediction> predictions,
                       const data::CocoDataset& ground_truth, const EvalOptions& options = {});

// COCO results JSON (array of {image_id, category_id, segmentation, score}).
// Each entry carries the producing config hash.
std::string results_to_json(std::span<const InstancePrediction> predictions,
                            const std::string& config_hash);
struct ResultsFile {
  std::vector<InstancePrediction> predictions;
  std::vector<std::string> config_hashes;  // distinct hashes, in first-seen order
};
ResultsFile parse_results(const std::string& text);

std::string metrics_to_json(const MetricsReport& report, const std::string& config_hash);
// Columns: iou_threshold, recall, precision.
std::string pr_curves_csv(const MetricsReport& report);
// Fixed-width mAP / AP50 / AP75 / AR table.
std::string metrics_table(const MetricsReport& report);

}  // namespace p2p::eval
