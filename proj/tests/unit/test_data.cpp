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
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "doctest.h"
#include "p2p/common/error.hpp"
#include "p2p/data/data.hpp"
#include "test_support.hpp"

using namespace p2p::data;
using p2p::Error;
using p2p::ErrorCode;
using p2p::geom::Point2;
using p2p::geom::PrimitiveKind;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInput;
}

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("p2p_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int cyclic_descents(const std::vector<int>& v) {
  int d = 0;
  for (std::size_t i = 0; i < v.size(); ++i) d += v[(i + 1) % v.size()] < v[i];
  return d;
}

Annotation annotation_of(std::vector<Point2> pts) {
  auto ring = p2p::geom::normalize_ring(pts);
  return {ring, bounds_of(ring), false};
}

}  // namespace

TEST_CASE("generate_scene is deterministic in (seed, index)") {
  SceneConfig cfg;
  cfg.seed = 42;
  Scene a = generate_scene(cfg, 0), b = generate_scene(cfg, 0), c = generate_scene(cfg, 1);
  CHECK(a.image == b.image);
  REQUIRE(a.annotations.size() == b.annotations.size());
  for (std::size_t i = 0; i < a.annotations.size(); ++i) {
    CHECK(a.annotations[i].ring == b.annotations[i].ring);
  }
  CHECK_FALSE(a.image == c.image);
}

TEST_CASE("single four-vertex buildings are rotated rectangles") {
  SceneConfig cfg;
  cfg.min_buildings = cfg.max_buildings = 1;
  cfg.min_vertices = cfg.max_vertices = 4;
  for (int i = 0; i < 50; ++i) {
    Scene s = generate_scene(cfg, i);
    REQUIRE(s.annotations.size() == 1);
    const auto& ring = s.annotations[0].ring;
    REQUIRE(ring.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
      const Point2 e0 = ring[(k + 1) % 4] - ring[k];
      const Point2 e1 = ring[(k + 2) % 4] - ring[(k + 1) % 4];
      CHECK(std::abs(e0.x * e1.x + e0.y * e1.y) < 1e-9 * std::hypot(e0.x, e0.y) * std::hypot(e1.x, e1.y) + 1e-9);
    }
  }
}

TEST_CASE("scene invariants over many indices") {
  SceneConfig cfg;
  cfg.seed = 7;
  for (int i = 0; i < 200; ++i) {
    Scene s = generate_scene(cfg, i);
    CHECK(s.image.pixels.size() == 128u * 128u);
    CHECK(s.annotations.size() >= 1);
    CHECK(s.annotations.size() <= 4);
    for (float v : s.image.pixels) {
      CHECK(std::abs(v * 255.0f - std::round(v * 255.0f)) < 1e-3f);
    }
    for (std::size_t a = 0; a < s.annotations.size(); ++a) {
      const auto& ann = s.annotations[a];
      const std::size_t v = ann.ring.size();
      CHECK(v % 2 == 0);
      CHECK(v >= 4);
      CHECK(v <= 12);
      CHECK(p2p::geom::signed_area(ann.ring) > 0);
      CHECK(ann.bbox == bounds_of(ann.ring));
      CHECK(ann.bbox.x0 >= 0);
      CHECK(ann.bbox.x1 <= 128);
      for (std::size_t b = a + 1; b < s.annotations.size(); ++b) {
        const BBox& o = s.annotations[b].bbox;
        CHECK((ann.bbox.x1 < o.x0 || o.x1 < ann.bbox.x0 || ann.bbox.y1 < o.y0 || o.y1 < ann.bbox.y0));
      }
      // Rectilinear: consecutive edges are perpendicular.
      for (std::size_t k = 0; k < v; ++k) {
        const Point2 e0 = ann.ring[(k + 1) % v] - ann.ring[k];
        const Point2 e1 = ann.ring[(k + 2) % v] - ann.ring[(k + 1) % v];
        CHECK(std::abs(e0.x * e1.x + e0.y * e1.y) < 1e-8);
      }
    }
  }
}

TEST_CASE("occlusion frequency follows the configured rate") {
  SceneConfig cfg;
  cfg.seed = 99;
  cfg.occlusion_rate = 0.3;
  std::int64_t total = 0, occluded = 0;
  for (int i = 0; i < 1000; ++i) {
    for (const Annotation& a : generate_scene(cfg, i).annotations) {
      ++total;
      occluded += a.occluded;
    }
  }
  const double rate = static_cast<double>(occluded) / total;
  CHECK(rate == doctest::Approx(0.3).epsilon(0.04 / 0.3));
}

TEST_CASE("occluders change pixels but not annotations") {
  SceneConfig cfg;
  cfg.texture_noise = 0.0;
  cfg.occlusion_rate = 0.0;
  Scene clean = generate_scene(cfg, 3);
  cfg.occlusion_rate = 1.0;
  Scene occ = generate_scene(cfg, 3);
  REQUIRE(clean.annotations.size() == occ.annotations.size());
  for (std::size_t i = 0; i < clean.annotations.size(); ++i) {
    CHECK(clean.annotations[i].ring == occ.annotations[i].ring);
  }
  CHECK_FALSE(clean.image == occ.image);
}

TEST_CASE("ring coverage integrates to the polygon area") {
  auto ring = p2p::geom::normalize_ring(std::vector<Point2>{{2, 2}, {10, 2}, {10, 10}, {2, 10}});
  auto cov = ring_coverage(ring, 16, 16);
  CHECK(std::accumulate(cov.begin(), cov.end(), 0.0) == doctest::Approx(64.0));
  std::mt19937_64 rng(1);
  auto star = p2p::testing::random_star_polygon(rng, 9, {40, 40}, 25);
  auto cov2 = ring_coverage(star, 80, 80);
  CHECK(std::accumulate(cov2.begin(), cov2.end(), 0.0) ==
        doctest::Approx(p2p::geom::signed_area(star)).epsilon(0.01));
}

TEST_CASE("PNG round trip is exact for quantised images") {
  SceneConfig cfg;
  Scene s = generate_scene(cfg, 5);
  fs::path dir = temp_dir("png");
  write_png(dir / "a.png", s.image);
  Image back = read_png(dir / "a.png");
  CHECK(back.width == 128);
  REQUIRE(back.pixels.size() == s.image.pixels.size());
  for (std::size_t i = 0; i < back.pixels.size(); ++i) {
    CHECK(std::lround(back.pixels[i] * 255) == std::lround(s.image.pixels[i] * 255));
  }
  CHECK(code_of([&] { read_png(dir / "missing.png"); }) == ErrorCode::kIo);
}

TEST_CASE("load_coco examples") {
  const std::string minimal = R"({"images":[{"id":1,"file_name":"a.png","width":64,"height":64}],
    "annotations":[{"id":1,"image_id":1,"category_id":1,
      "segmentation":[[10,10,20,10,20,20,10,20]],"bbox":[10,10,10,10]}]})";
  CocoDataset d = parse_coco(minimal);
  REQUIRE(d.images.size() == 1);
  CHECK(d.images[0].annotations.size() == 1);
  CHECK(d.dropped == 0);

  std::string forty = R"({"images":[{"id":1,"file_name":"a.png","width":64,"height":64}],
    "annotations":[{"id":1,"image_id":1,"segmentation":[[)";
  for (int i = 0; i < 40; ++i) {
    const double a = 2 * 3.14159265358979 * i / 40;
    forty += (i ? "," : "") + std::to_string(30 + 20 * std::cos(a)) + "," +
             std::to_string(30 + 20 * std::sin(a));
  }
  forty += "]]}]}";
  CocoDataset d40 = parse_coco(forty);
  CHECK(d40.images[0].annotations.empty());
  CHECK(d40.dropped == 1);

  CocoDataset empty = parse_coco(R"({"images":[],"annotations":[]})");
  CHECK(empty.images.empty());

  try {
    parse_coco("{\n  \"images\": [,]\n}");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  fs::path dir = temp_dir("coco_missing");
  try {
    parse_coco(R"({"images":[{"id":17,"file_name":"nope.png","width":8,"height":8}]})", dir);
    FAIL("expected ingestion error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIngestion);
    CHECK(std::string(e.what()).find("17") != std::string::npos);
  }
}

TEST_CASE("synthetic dataset round trip through COCO JSON") {
  SceneConfig cfg;
  cfg.seed = 11;
  fs::path dir = temp_dir("dataset");
  write_synthetic_dataset(dir, cfg, 6, "cafebabe");
  Dataset ds = open_dataset(dir);
  REQUIRE(ds.size() == 6);
  CHECK(ds.manifest_hash.size() == 64);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    Scene s = generate_scene(cfg, static_cast<std::int64_t>(i));
    const auto& anns = ds.coco.images[i].annotations;
    REQUIRE(anns.size() == s.annotations.size());
    for (std::size_t a = 0; a < anns.size(); ++a) {
      REQUIRE(anns[a].ring.size() == s.annotations[a].ring.size());
      for (std::size_t k = 0; k < anns[a].ring.size(); ++k) {
        CHECK(std::abs(anns[a].ring[k].x - s.annotations[a].ring[k].x) < 1e-4);
        CHECK(std::abs(anns[a].ring[k].y - s.annotations[a].ring[k].y) < 1e-4);
      }
      CHECK(anns[a].occluded == s.annotations[a].occluded);
    }
    CHECK(ds.load_image(i) == s.image);
  }
  // Re-export and re-generate are byte-identical.
  std::ifstream f(dir / "annotations.json");
  std::string first((std::istreambuf_iterator<char>(f)), {});
  CHECK(coco_to_json(ds.coco) == first);
  fs::path dir2 = temp_dir("dataset2");
  write_synthetic_dataset(dir2, cfg, 6, "cafebabe");
  std::ifstream f2(dir2 / "annotations.json");
  CHECK(std::string((std::istreambuf_iterator<char>(f2)), {}) == first);

  fs::path empty = temp_dir("dataset_empty");
  write_synthetic_dataset(empty, cfg, 0, "x");
  CHECK(open_dataset(empty).size() == 0);
}

TEST_CASE("make_roi examples") {
  RoiSpec r = make_roi({10, 10, 20, 20}, 1.1, 100, 100);
  CHECK(r.box.x0 == doctest::Approx(9.5));
  CHECK(r.box.y0 == doctest::Approx(9.5));
  CHECK(r.box.x1 == doctest::Approx(20.5));
  CHECK(r.box.y1 == doctest::Approx(20.5));
  RoiSpec same = make_roi({10, 10, 20, 20}, 1.0, 100, 100);
  CHECK(same.box == BBox{10, 10, 20, 20});
  RoiSpec clipped = make_roi({0, 0, 10, 10}, 1.1, 100, 100);
  CHECK(clipped.box.x0 == 0.0);
  CHECK(code_of([] { make_roi({5, 5, 5, 9}, 1.1, 100, 100); }) == ErrorCode::kDegenerateBox);

  std::mt19937_64 rng(3);
  double lo = 2, hi = 0, sum = 0;
  for (int i = 0; i < 10000; ++i) {
    const double e = make_roi({20, 20, 40, 40}, 1.1, 100, 100, &rng).expansion;
    lo = std::min(lo, e);
    hi = std::max(hi, e);
    sum += e;
  }
  CHECK(lo >= 1.0);
  CHECK(hi <= 1.2);
  CHECK(sum / 10000 == doctest::Approx(1.1).epsilon(0.005 / 1.1));
}

TEST_CASE("make_targets examples") {
  Annotation sq = annotation_of({{10, 10}, {30, 10}, {30, 30}, {10, 30}});
  RoiSpec roi = make_roi(sq.bbox, 1.0, 64, 64);
  TrainingTarget tv = make_targets(sq, roi, PrimitiveKind::kVertex, 36);
  REQUIRE(tv.size() == 4);
  CHECK(tv.primitives[0].points[0] == Point2{0, 0});
  CHECK(tv.primitives[1].points[0] == Point2{1, 0});
  CHECK(tv.primitives[2].points[0] == Point2{1, 1});
  CHECK(tv.primitives[3].points[0] == Point2{0, 1});

  TrainingTarget tc = make_targets(sq, roi, PrimitiveKind::kCorner, 36);
  REQUIRE(tc.size() == 4);
  CHECK(tc.primitives[1].points[1] == Point2{1, 0});
  CHECK(tc.primitives[1].points[0] == Point2{0, 0});

  // Rotated L shape.
  std::vector<Point2> l{{0, 0}, {20, 0}, {20, 8}, {8, 8}, {8, 20}, {0, 20}};
  const double t = 0.4;
  for (Point2& p : l) p = {30 + std::cos(t) * p.x - std::sin(t) * p.y, 10 + std::sin(t) * p.x + std::cos(t) * p.y};
  Annotation la = annotation_of(l);
  RoiSpec lroi = make_roi(la.bbox, 1.1, 64, 64);
  for (PrimitiveKind kind : {PrimitiveKind::kVertex, PrimitiveKind::kLine, PrimitiveKind::kCorner}) {
    TrainingTarget tl = make_targets(la, lroi, kind, 36);
    CHECK(tl.size() == 6);
    CHECK(cyclic_descents(tl.orders) == 1);
    for (int o : tl.orders) CHECK((o >= 0 && o < 36));
    for (const auto& p : tl.primitives) {
      for (const Point2& q : p.pts()) {
        CHECK((q.x >= 0 && q.x <= 1 && q.y >= 0 && q.y <= 1));
        const Point2 back = from_roi(lroi, q);
        const Point2 orig = from_roi(lroi, to_roi(lroi, back));
        CHECK(std::abs(back.x - orig.x) < 1e-6);
      }
    }
  }
  // Normalisation inverts exactly on ring vertices.
  for (const Point2& p : la.ring.vertices()) {
    const Point2 r = from_roi(lroi, to_roi(lroi, p));
    CHECK(std::abs(r.x - p.x) < 1e-6);
    CHECK(std::abs(r.y - p.y) < 1e-6);
  }

  RoiSpec small{{12, 12, 20, 20}, 1.0};
  CHECK(code_of([&] { make_targets(sq, small, PrimitiveKind::kVertex, 36); }) ==
        ErrorCode::kTargetConstruction);
}

TEST_CASE("every synthetic target respects the label and size bounds") {
  SceneConfig cfg;
  cfg.seed = 5;
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    Scene s = generate_scene(cfg, i);
    for (const Annotation& a : s.annotations) {
      RoiSpec roi = make_roi(a.bbox, 1.1, 128, 128, &rng);
      TrainingTarget t = make_targets(a, roi, PrimitiveKind::kCorner, 36);
      CHECK(t.size() <= 30);
      for (int o : t.orders) CHECK(o < 36);
    }
  }
}
