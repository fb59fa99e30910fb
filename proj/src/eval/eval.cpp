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
#include "p2p/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>
#include "p2p/common/error.hpp"

namespace p2p::eval {

using nlohmann::json;

std::int64_t Mask::area() const {
  std::int64_t n = 0;
  for (std::uint8_t b : bits) n += b;
  return n;
}

Mask rasterize(const geom::PolygonRing& ring, int height, int width) {
  Mask m{height, width, std::vector<std::uint8_t>(static_cast<std::size_t>(height) * width, 0)};
  for (int y = 0; y < height; ++y) {
    const std::vector<double> xs = geom::scanline_crossings(ring, y + 0.5);
    std::uint8_t* row = m.bits.data() + static_cast<std::size_t>(y) * width;
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const double lo = std::ceil(xs[k] - 0.5), hi = std::ceil(xs[k + 1] - 0.5);
      const int begin = static_cast<int>(std::clamp(lo, 0.0, static_cast<double>(width)));
      const int end = static_cast<int>(std::clamp(hi, 0.0, static_cast<double>(width)));
      for (int x = begin; x < end; ++x) row[x] = 1;
    }
  }
  return m;
}

double mask_iou(const Mask& a, const Mask& b) {
  if (a.height != b.height || a.width != b.width) {
    throw Error(ErrorCode::kShape, "mask shapes differ: " + std::to_string(a.height) + "x" +
                                       std::to_string(a.width) + " vs " +
                                       std::to_string(b.height) + "x" + std::to_string(b.width));
  }
  std::int64_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    inter += a.bits[i] & b.bits[i];
    uni += a.bits[i] | b.bits[i];
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

std::vector<double> linspace(double start, double stop, int num) {
  std::vector<double> y(static_cast<std::size_t>(num));
  const double step = (stop - start) / (num - 1);
  for (int i = 0; i < num; ++i) y[i] = i * step + start;
  y.back() = stop;
  return y;
}

// Score descending, ties broken by content.
bool ranks_before(const InstancePrediction& a, const InstancePrediction& b) {
  if (a.score != b.score) return a.score > b.score;
  const auto& va = a.ring.vertices();
  const auto& vb = b.ring.vertices();
  if (va.size() != vb.size()) return va.size() < vb.size();
  for (std::size_t i = 0; i < va.size(); ++i) {
    if (va[i].x != vb[i].x) return va[i].x < vb[i].x;
    if (va[i].y != vb[i].y) return va[i].y < vb[i].y;
  }
  return a.id < b.id;
}

struct ImageEval {
  std::vector<double> scores;             // sorted, truncated detections
  std::vector<std::vector<char>> matched;  // [threshold][detection]
};

ImageEval evaluate_image(const data::ImageRecord& image,
                         std::vector<const InstancePrediction*> dets,
                         const std::vector<double>& thresholds, int max_det) {
  std::stable_sort(dets.begin(), dets.end(),
                   [](const InstancePrediction* a, const InstancePrediction* b) {
                     return ranks_before(*a, *b);
                   });
  if (dets.size() > static_cast<std::size_t>(max_det)) dets.resize(max_det);

  std::vector<Mask> gt_masks;
  for (const data::Annotation& a : image.annotations) {
    gt_masks.push_back(rasterize(a.ring, image.height, image.width));
  }
  const std::size_t nd = dets.size(), ng = gt_masks.size();
  std::vector<double> ious(nd * ng);
  for (std::size_t d = 0; d < nd; ++d) {
    const Mask dm = rasterize(dets[d]->ring, image.height, image.width);
    for (std::size_t g = 0; g < ng; ++g) ious[d * ng + g] = mask_iou(dm, gt_masks[g]);
  }

  ImageEval out;
  for (const InstancePrediction* d : dets) out.scores.push_back(d->score);
  for (double t : thresholds) {
    std::vector<char> gt_taken(ng, 0), dt_matched(nd, 0);
    for (std::size_t d = 0; d < nd; ++d) {
      double best = std::min(t, 1.0 - 1e-10);
      std::ptrdiff_t m = -1;
      for (std::size_t g = 0; g < ng; ++g) {
        if (gt_taken[g]) continue;
        if (ious[d * ng + g] < best) continue;
        best = ious[d * ng + g];
        m = static_cast<std::ptrdiff_t>(g);
      }
      if (m < 0) continue;
      dt_matched[d] = 1;
      gt_taken[static_cast<std::size_t>(m)] = 1;
    }
    out.matched.push_back(std::move(dt_matched));
  }
  return out;
}

}  // namespace

std::vector<double> coco_iou_thresholds() {
  return linspace(0.5, 0.95, static_cast<int>(std::round((0.95 - 0.5) / 0.05)) + 1);
}

std::vector<double> coco_recall_thresholds() {
  return linspace(0.0, 1.0, static_cast<int>(std::round((1.0 - 0.0) / 0.01)) + 1);
}

MetricsReport evaluate(std::span<const InstancePrediction> predictions,
                       const data::CocoDataset& ground_truth, const EvalOptions& options) {
  MetricsReport r;
  r.iou_thresholds =
      options.iou_thresholds.empty() ? coco_iou_thresholds() : options.iou_thresholds;
  r.recall_thresholds = coco_recall_thresholds();
  r.max_detections = options.max_detections;
  const std::size_t nt = r.iou_thresholds.size(), nr = r.recall_thresholds.size();

  std::vector<std::size_t> order(ground_truth.images.size());
  std::map<std::int64_t, std::size_t> slot;
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ground_truth.images[a].id < ground_truth.images[b].id;
  });
  for (std::size_t k = 0; k < order.size(); ++k) slot[ground_truth.images[order[k]].id] = k;

  std::vector<std::vector<const InstancePrediction*>> per_image(order.size());
  std::set<std::int64_t> ids;
  for (const InstancePrediction& p : predictions) {
    if (p.id >= 0 && !ids.insert(p.id).second) {
      throw Error(ErrorCode::kInput, "duplicate prediction id " + std::to_string(p.id));
    }
    auto it = slot.find(p.image_id);
    if (it == slot.end()) {
      throw Error(ErrorCode::kInput,
                  "prediction references unknown image id " + std::to_string(p.image_id));
    }
    per_image[it->second].push_back(&p);
  }

  std::vector<ImageEval> evals(order.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < order.size(); ++k) {
    evals[k] = evaluate_image(ground_truth.images[order[k]], per_image[k], r.iou_thresholds,
                              options.max_detections);
  }

  std::int64_t num_gt = 0;
  for (const data::ImageRecord& im : ground_truth.images) {
    num_gt += static_cast<std::int64_t>(im.annotations.size());
  }
  r.images = static_cast<std::int64_t>(order.size());
  r.predictions = static_cast<std::int64_t>(predictions.size());
  r.ground_truth = num_gt;

  std::vector<double> scores;
  std::vector<std::pair<std::size_t, std::size_t>> where;  // (image, detection)
  for (std::size_t k = 0; k < evals.size(); ++k) {
    for (std::size_t d = 0; d < evals[k].scores.size(); ++d) {
      scores.push_back(evals[k].scores[d]);
      where.emplace_back(k, d);
    }
  }
  std::vector<std::size_t> rank(scores.size());
  for (std::size_t i = 0; i < rank.size(); ++i) rank[i] = i;
  std::stable_sort(rank.begin(), rank.end(),
                   [&](std::size_t a, std::size_t b) { return -scores[a] < -scores[b]; });

  r.precision.assign(nt, std::vector<double>(nr, -1.0));
  r.ap_per_threshold.assign(nt, -1.0);
  r.recall_per_threshold.assign(nt, -1.0);
  if (num_gt > 0) {
    const double eps = std::numeric_limits<double>::epsilon();
    const std::size_t nd = rank.size();
    for (std::size_t t = 0; t < nt; ++t) {
      std::vector<double> rc(nd), pr(nd);
      double tp = 0.0, fp = 0.0;
      for (std::size_t i = 0; i < nd; ++i) {
        const auto [k, d] = where[rank[i]];
        if (evals[k].matched[t][d]) {
          tp += 1.0;
        } else {
          fp += 1.0;
        }
        rc[i] = tp / static_cast<double>(num_gt);
        pr[i] = tp / (fp + tp + eps);
      }
      r.recall_per_threshold[t] = nd > 0 ? rc.back() : 0.0;
      for (std::size_t i = nd; i-- > 1;) {
        if (pr[i] > pr[i - 1]) pr[i - 1] = pr[i];
      }
      std::vector<double>& q = r.precision[t];
      for (std::size_t ri = 0; ri < nr; ++ri) {
        const std::size_t pi = static_cast<std::size_t>(
            std::lower_bound(rc.begin(), rc.end(), r.recall_thresholds[ri]) - rc.begin());
        q[ri] = pi < nd ? pr[pi] : 0.0;
      }
      double s = 0.0;
      for (double v : q) s += v;
      r.ap_per_threshold[t] = s / static_cast<double>(nr);
    }
    double sum_ap = 0.0, sum_ar = 0.0;
    for (std::size_t t = 0; t < nt; ++t) {
      sum_ap += r.ap_per_threshold[t];
      sum_ar += r.recall_per_threshold[t];
    }
    r.map = sum_ap / static_cast<double>(nt);
    r.ar = sum_ar / static_cast<double>(nt);
    for (std::size_t t = 0; t < nt; ++t) {
      if (r.iou_thresholds[t] == 0.5) r.ap50 = r.ap_per_threshold[t];
      if (r.iou_thresholds[t] == 0.75) r.ap75 = r.ap_per_threshold[t];
    }
  }
  return r;
}

std::string results_to_json(std::span<const InstancePrediction> predictions,
                            const std::string& config_hash) {
  json out = json::array();
  for (const InstancePrediction& p : predictions) {
    json poly = json::array();
    double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
    for (const geom::Point2& v : p.ring.vertices()) {
      poly.push_back(v.x);
      poly.push_back(v.y);
      x0 = std::min(x0, v.x);
      y0 = std::min(y0, v.y);
      x1 = std::max(x1, v.x);
      y1 = std::max(y1, v.y);
    }
    json e = {{"image_id", p.image_id},
              {"category_id", 1},
              {"segmentation", json::array({poly})},
              {"bbox", {x0, y0, x1 - x0, y1 - y0}},
              {"score", p.score},
              {"config_hash", config_hash}};
    if (p.id >= 0) e["id"] = p.id;
    out.push_back(std::move(e));
  }
  return out.dump(1) + "\n";
}

ResultsFile parse_results(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("malformed results JSON: ") + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::kParse, "results JSON must be an array");
  ResultsFile out;
  try {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      const json& e = doc[i];
      InstancePrediction p;
      p.image_id = e.at("image_id").get<std::int64_t>();
      p.score = e.at("score").get<double>();
      p.id = e.value("id", std::int64_t{-1});
      const json& seg = e.at("segmentation");
      if (!seg.is_array() || seg.empty() || !seg[0].is_array() || seg[0].size() % 2 != 0) {
        throw Error(ErrorCode::kInput, "result " + std::to_string(i) + ": unsupported segmentation");
      }
      std::vector<geom::Point2> pts;
      for (std::size_t k = 0; k + 1 < seg[0].size(); k += 2) {
        pts.push_back({seg[0][k].get<double>(), seg[0][k + 1].get<double>()});
      }
      try {
        p.ring = geom::normalize_ring(pts);
      } catch (const Error& err) {
        throw Error(ErrorCode::kInput, "result " + std::to_string(i) + ": " + err.what());
      }
      const std::string hash = e.value("config_hash", std::string());
      if (std::find(out.config_hashes.begin(), out.config_hashes.end(), hash) ==
          out.config_hashes.end()) {
        out.config_hashes.push_back(hash);
      }
      out.predictions.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("results schema violation: ") + e.what());
  }
  return out;
}

std::string metrics_to_json(const MetricsReport& r, const std::string& config_hash) {
  json j = {{"format", "p2p-metrics-v1"},
            {"config_hash", config_hash},
            {"mAP", r.map},
            {"AP50", r.ap50},
            {"AP75", r.ap75},
            {"AR@" + std::to_string(r.max_detections), r.ar},
            {"max_detections", r.max_detections},
            {"images", r.images},
            {"predictions", r.predictions},
            {"ground_truth", r.ground_truth},
            {"iou_thresholds", r.iou_thresholds},
            {"ap_per_threshold", r.ap_per_threshold},
            {"recall_per_threshold", r.recall_per_threshold}};
  return j.dump(2) + "\n";
}

std::string pr_curves_csv(const MetricsReport& r) {
  std::ostringstream os;
  os << "iou_threshold,recall,precision\n";
  char buf[96];
  for (std::size_t t = 0; t < r.precision.size(); ++t) {
    for (std::size_t k = 0; k < r.recall_thresholds.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f,%.17g\n", r.iou_thresholds[t],
                    r.recall_thresholds[k], r.precision[t][k]);
      os << buf;
    }
  }
  return os.str();
}

std::string metrics_table(const MetricsReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%-8s %-8s %-8s %-8s\n%-8.3f %-8.3f %-8.3f %-8.3f\n", "mAP", "AP50", "AP75",
                ("AR@" + std::to_string(r.max_detections)).c_str(), r.map, r.ap50, r.ap75, r.ar);
  return buf;
}

}  // namespace p2p::eval
