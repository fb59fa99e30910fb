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

// Synthetic rectilinear-building scenes, COCO-format datasets on disk, ROI
// construction and training targets.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "p2p/geom/geom.hpp"

namespace p2p::data {

struct BBox {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

BBox bounds_of(const geom::PolygonRing& ring);

// Single-channel intensity image in [0, 1], row-major.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  float at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  friend bool operator==(const Image&, const Image&) = default;
};

struct Annotation {
  geom::PolygonRing ring;
  BBox bbox;
  bool occluded = false;
};

struct SceneConfig {
  int image_size = 128;
  int min_buildings = 1;
  int max_buildings = 4;
  int min_vertices = 4;
  int max_vertices = 12;
  double min_rotation_deg = 0.0;
  double max_rotation_deg = 90.0;
  double occlusion_rate = 0.3;
  double texture_noise = 0.05;
  // Side lengths of the enclosing rectangle before rotation, in pixels.
  double min_building_size = 20.0;
  double max_building_size = 56.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Scene {
  Image image;
  std::vector<Annotation> annotations;
};

// Deterministic in (config.seed, index).
Scene generate_scene(const SceneConfig& config, std::int64_t index);

// Anti-aliased coverage of the ring interior, 4x4 samples per pixel.
std::vector<float> ring_coverage(const geom::PolygonRing& ring, int height, int width);

// 8-bit grayscale PNG. Written pixels are round(255 * v).
void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

struct ImageRecord {
  std::int64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
  std::vector<Annotation> annotations;
};

struct CocoDataset {
  std::vector<ImageRecord> images;
  std::int64_t dropped = 0;  // annotations rejected by the ring filter
};

inline constexpr int kMaxRingVertices = 36;

// Parses a COCO instance file. Keeps the first polygon of each annotation;
// rings that are degenerate or have more than kMaxRingVertices vertices are
// dropped and counted. When image_root is given every referenced image file
// must exist there.
CocoDataset load_coco(const std::filesystem::path& path,
                      const std::optional<std::filesystem::path>& image_root = std::nullopt);
CocoDataset parse_coco(const std::string& text,
                       const std::optional<std::filesystem::path>& image_root = std::nullopt);
std::string coco_to_json(const CocoDataset& dataset);

// A dataset directory: images/*.png, annotations.json, manifest.json.
struct Dataset {
  std::filesystem::path root;
  CocoDataset coco;
  std::string manifest_hash;  // sha256 of manifest.json

  std::size_t size() const { return coco.images.size(); }
  Image load_image(std::size_t i) const;
};

// Generates `count` scenes into `dir` with deterministic bytes. config_hash is
// recorded in the manifest.
void write_synthetic_dataset(const std::filesystem::path& dir, const SceneConfig& config,
                             std::int64_t count, const std::string& config_hash);
Dataset open_dataset(const std::filesystem::path& dir);

struct RoiSpec {
  BBox box;
  double expansion = 1.0;
};

// Scales bbox about its centre and clips to [0, width] x [0, height]. With a
// generator the ratio is drawn uniformly from [1, 2 * (expansion - 1) + 1].
RoiSpec make_roi(const BBox& bbox, double expansion, int width, int height,
                 std::mt19937_64* jitter = nullptr);

struct TrainingTarget {
  // Primitive points in ROI-normalised [0, 1]^2 coordinates.
  std::vector<geom::Primitive> primitives;
  std::vector<int> orders;

  std::size_t size() const { return primitives.size(); }
};

geom::Point2 to_roi(const RoiSpec& roi, geom::Point2 p);
geom::Point2 from_roi(const RoiSpec& roi, geom::Point2 p);

TrainingTarget make_targets(const Annotation& annotation, const RoiSpec& roi,
                            geom::PrimitiveKind kind, int n_order);

}  // namespace p2p::data
