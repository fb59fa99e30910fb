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
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include <json.hpp>
#include "p2p/common/error.hpp"
#include "p2p/eval/eval.hpp"
#include "test_support.hpp"

using namespace p2p;
using namespace p2p::eval;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

geom::PolygonRing box(double x0, double y0, double x1, double y1) {
  const geom::Point2 pts[4] = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  return geom::normalize_ring(pts);
}

// Ground truth of `images` 64x64 images with up to three random star polygons each.
data::CocoDataset random_ground_truth(std::mt19937_64& rng, int images) {
  data::CocoDataset ds;
  std::uniform_int_distribution<int> count(0, 3), verts(4, 9);
  std::uniform_real_distribution<double> pos(14, 50);
  for (int i = 0; i < images; ++i) {
    data::ImageRecord rec;
    rec.id = 100 + i;
    rec.width = 64;
    rec.height = 64;
    const int k = count(rng);
    for (int j = 0; j < k; ++j) {
      auto ring = p2p::testing::random_star_polygon(rng, verts(rng), {pos(rng), pos(rng)}, 12);
      rec.annotations.push_back({ring, data::bounds_of(ring), false});
    }
    ds.images.push_back(std::move(rec));
  }
  return ds;
}

std::vector<InstancePrediction> perfect(const data::CocoDataset& gt, std::mt19937_64& rng) {
  std::vector<InstancePrediction> out;
  std::uniform_real_distribution<double> score(0.5, 1.0);
  for (const auto& im : gt.images) {
    for (const auto& a : im.annotations) out.push_back({-1, im.id, a.ring, score(rng)});
  }
  return out;
}

std::vector<InstancePrediction> jittered(const data::CocoDataset& gt, std::mt19937_64& rng) {
  std::vector<InstancePrediction> out;
  std::normal_distribution<double> shift(0.0, 3.0);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  for (const auto& im : gt.images) {
    for (const auto& a : im.annotations) {
      if (score(rng) < 0.2) continue;
      out.push_back({-1, im.id, geom::translated(a.ring, {shift(rng), shift(rng)}), score(rng)});
    }
    if (score(rng) < 0.5) {
      out.push_back({-1, im.id, box(2.3, 2.1, 9.7, 10.2), score(rng)});
    }
  }
  return out;
}

void check_same(const MetricsReport& a, const MetricsReport& b, double tol = 0.0) {
  CHECK(std::abs(a.map - b.map) <= tol);
  CHECK(std::abs(a.ap50 - b.ap50) <= tol);
  CHECK(std::abs(a.ap75 - b.ap75) <= tol);
  CHECK(std::abs(a.ar - b.ar) <= tol);
}

}  // namespace

TEST_CASE("rasterize") {
  CHECK(rasterize(box(0, 0, 10, 10), 20, 20).area() == 100);
  CHECK(rasterize(box(30, 30, 40, 40), 20, 20).area() == 0);
  const Mask clipped = rasterize(box(-5, 15, 8, 30), 20, 20);
  CHECK(clipped.area() == 8 * 5);
  CHECK(clipped.at(19, 0));
  CHECK(!clipped.at(14, 0));

  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> verts(3, 14);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto ring = p2p::testing::random_star_polygon(rng, verts(rng), {60.3, 58.7}, 40);
    const double area = std::abs(geom::signed_area(ring));
    if (area < 400) continue;
    ++checked;
    const double mask_area = static_cast<double>(rasterize(ring, 128, 128).area());
    CHECK(std::abs(mask_area - area) <= 0.02 * area);
  }
  CHECK(checked > 250);
}

TEST_CASE("mask_iou") {
  const Mask a = rasterize(box(0, 0, 10, 10), 30, 30);
  const Mask b = rasterize(box(5, 0, 15, 10), 30, 30);
  const Mask c = rasterize(box(20, 20, 25, 25), 30, 30);
  CHECK(mask_iou(a, a) == 1.0);
  CHECK(mask_iou(a, c) == 0.0);
  CHECK(mask_iou(a, b) == doctest::Approx(50.0 / 150.0));
  const Mask d = rasterize(box(5, 5, 15, 15), 30, 30);
  CHECK(mask_iou(a, d) == doctest::Approx(25.0 / 175.0));
  const Mask empty = rasterize(box(40, 40, 50, 50), 30, 30);
  CHECK(mask_iou(empty, empty) == 0.0);
  try {
    mask_iou(a, rasterize(box(0, 0, 10, 10), 30, 31));
    FAIL("expected a shape error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kShape);
  }
}

TEST_CASE("COCO threshold grids") {
  const auto t = coco_iou_thresholds();
  REQUIRE(t.size() == 10);
  CHECK(t[0] == 0.5);
  CHECK(t[5] == 0.75);
  CHECK(t[9] == 0.95);
  const auto r = coco_recall_thresholds();
  REQUIRE(r.size() == 101);
  CHECK(r[0] == 0.0);
  CHECK(r[100] == 1.0);
}

TEST_CASE("evaluate: trivial cases") {
  std::mt19937_64 rng(22);
  const data::CocoDataset gt = random_ground_truth(rng, 12);
  const auto exact = perfect(gt, rng);
  const MetricsReport full = evaluate(exact, gt);
  CHECK(full.map == doctest::Approx(1.0));
  CHECK(full.ap50 == doctest::Approx(1.0));
  CHECK(full.ap75 == doctest::Approx(1.0));
  CHECK(full.ar == doctest::Approx(1.0));

  const MetricsReport none = evaluate({}, gt);
  CHECK(none.map == 0.0);
  CHECK(none.ap50 == 0.0);
  CHECK(none.ar == 0.0);

  std::vector<InstancePrediction> twice = exact;
  twice.insert(twice.end(), exact.begin(), exact.end());
  for (std::size_t i = exact.size(); i < twice.size(); ++i) twice[i].score *= 0.5;
  CHECK(evaluate(twice, gt).ap50 == doctest::Approx(1.0));
}

TEST_CASE("evaluate: permutation invariance and low-score false positives") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const data::CocoDataset gt = random_ground_truth(rng, 10);
    std::vector<InstancePrediction> preds = jittered(gt, rng);
    const MetricsReport base = evaluate(preds, gt);
    for (double v : base.ap_per_threshold) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    for (const auto& curve : base.precision) {
      for (std::size_t k = 1; k < curve.size(); ++k) CHECK(curve[k] <= curve[k - 1]);
    }
    std::shuffle(preds.begin(), preds.end(), rng);
    check_same(evaluate(preds, gt), base);

    // Ties in score are ordered by content, not by input position.
    for (auto& p : preds) p.score = std::round(p.score * 4) / 4;
    const MetricsReport tied = evaluate(preds, gt);
    std::reverse(preds.begin(), preds.end());
    check_same(evaluate(preds, gt), tied);

    std::vector<InstancePrediction> more = preds;
    more.push_back({-1, gt.images[0].id, box(0.2, 60.1, 3.3, 63.4), -1.0});
    const MetricsReport fp = evaluate(more, gt);
    CHECK(fp.map <= tied.map);
    CHECK(fp.ap50 <= tied.ap50);
    CHECK(fp.ap75 <= tied.ap75);
  }
}

TEST_CASE("evaluate: input errors") {
  std::mt19937_64 rng(24);
  const data::CocoDataset gt = random_ground_truth(rng, 3);
  std::vector<InstancePrediction> preds{{7, gt.images[0].id, box(1, 1, 5, 5), 0.5},
                                        {7, gt.images[1].id, box(1, 1, 5, 5), 0.4}};
  try {
    evaluate(preds, gt);
    FAIL("expected an input error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInput);
  }
  preds[1].id = 8;
  preds[1].image_id = 9999;
  try {
    evaluate(preds, gt);
    FAIL("expected an input error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInput);
  }
}

TEST_CASE("results JSON round trip and report serialisation") {
  std::mt19937_64 rng(25);
  const data::CocoDataset gt = random_ground_truth(rng, 6);
  const auto preds = jittered(gt, rng);
  const std::string text = results_to_json(preds, "abc123");
  const ResultsFile back = parse_results(text);
  REQUIRE(back.predictions.size() == preds.size());
  CHECK(back.config_hashes == std::vector<std::string>{"abc123"});
  for (std::size_t i = 0; i < preds.size(); ++i) {
    CHECK(back.predictions[i].image_id == preds[i].image_id);
    CHECK(back.predictions[i].score == preds[i].score);
    CHECK(geom::equal_up_to_rotation(back.predictions[i].ring, preds[i].ring, 0.0));
  }
  const MetricsReport r = evaluate(preds, gt);
  const auto j = nlohmann::json::parse(metrics_to_json(r, "abc123"));
  CHECK(j.at("config_hash") == "abc123");
  CHECK(j.at("mAP").get<double>() == r.map);
  CHECK(j.at("AR@100").get<double>() == r.ar);
  const std::string csv = pr_curves_csv(r);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 10 * 101);
  CHECK(metrics_table(r).find("AR@100") != std::string::npos);

  try {
    parse_results("{\"not\": \"an array\"}");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
  }
}

TEST_CASE("evaluate matches the reference evaluator on the snapshot set") {
  const std::string dir = P2P_FIXTURE_DIR "/ap_snapshot";
  const data::CocoDataset gt = data::parse_coco(slurp(dir + "/gt.json"), std::nullopt);
  REQUIRE(gt.images.size() == 20);
  const ResultsFile preds = parse_results(slurp(dir + "/predictions.json"));
  const auto expected = nlohmann::json::parse(slurp(dir + "/expected_metrics.json"));
  const MetricsReport r = evaluate(preds.predictions, gt);
  CHECK(std::abs(r.map - expected.at("mAP").get<double>()) <= 1e-6);
  CHECK(std::abs(r.ap50 - expected.at("AP50").get<double>()) <= 1e-6);
  CHECK(std::abs(r.ap75 - expected.at("AP75").get<double>()) <= 1e-6);
  CHECK(std::abs(r.ar - expected.at("AR@100").get<double>()) <= 1e-6);
  const auto per_t = expected.at("ap_per_threshold").get<std::vector<double>>();
  const auto precision = expected.at("precision").get<std::vector<std::vector<double>>>();
  for (std::size_t t = 0; t < per_t.size(); ++t) {
    CHECK(std::abs(r.ap_per_threshold[t] - per_t[t]) <= 1e-6);
    for (std::size_t k = 0; k < 101; ++k) {
      CHECK(std::abs(r.precision[t][k] - precision[t][k]) <= 1e-6);
    }
  }
}
