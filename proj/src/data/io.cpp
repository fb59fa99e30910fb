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
#include <png.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include "p2p/common/error.hpp"
#include "p2p/common/hash.hpp"
#include "p2p/data/data.hpp"
#include "p2p/data/json.hpp"

namespace p2p::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << bytes;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::string location_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col) + " (offset " +
         std::to_string(byte) + ")";
}

std::string image_file_name(std::int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06lld.png", static_cast<long long>(index));
  return buf;
}

}  // namespace

void write_png(const fs::path& path, const Image& image) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> bytes(image.pixels.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const float v = std::clamp(image.pixels[i], 0.0f, 1.0f);
    bytes[i] = static_cast<png_byte>(std::lround(v * 255.0f));
  }
  if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw Error(ErrorCode::kIo, "cannot write PNG " + path.string() + ": " + png.message);
  }
}

Image read_png(const fs::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw Error(ErrorCode::kIo, "cannot read PNG " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> bytes(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, bytes.data(), 0, nullptr)) {
    png_image_free(&png);
    throw Error(ErrorCode::kIo, "cannot decode PNG " + path.string() + ": " + png.message);
  }
  Image img;
  img.width = static_cast<int>(png.width);
  img.height = static_cast<int>(png.height);
  img.pixels.resize(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) img.pixels[i] = bytes[i] / 255.0f;
  return img;
}

CocoDataset parse_coco(const std::string& text, const std::optional<fs::path>& image_root) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, "malformed COCO JSON at " + location_of(text, e.byte) +
                                       ": " + e.what());
  }
  CocoDataset out;
  try {
    if (!doc.is_object()) throw Error(ErrorCode::kParse, "top level must be an object");
    std::map<std::int64_t, std::size_t> by_id;
    for (const json& im : doc.at("images")) {
      ImageRecord rec;
      rec.id = im.at("id").get<std::int64_t>();
      rec.file_name = im.at("file_name").get<std::string>();
      rec.width = im.at("width").get<int>();
      rec.height = im.at("height").get<int>();
      if (by_id.count(rec.id)) {
        throw Error(ErrorCode::kParse, "duplicate image id " + std::to_string(rec.id));
      }
      if (image_root && !fs::exists(*image_root / rec.file_name)) {
        throw Error(ErrorCode::kIngestion, "image id " + std::to_string(rec.id) +
                                               ": missing file " +
                                               (*image_root / rec.file_name).string());
      }
      by_id[rec.id] = out.images.size();
      out.images.push_back(std::move(rec));
    }
    if (doc.contains("annotations")) {
      for (const json& an : doc.at("annotations")) {
        const auto image_id = an.at("image_id").get<std::int64_t>();
        auto it = by_id.find(image_id);
        if (it == by_id.end()) {
          throw Error(ErrorCode::kIngestion,
                      "annotation references unknown image id " + std::to_string(image_id));
        }
        const json& seg = an.at("segmentation");
        if (!seg.is_array() || seg.empty() || !seg[0].is_array() || seg[0].size() % 2 != 0) {
          ++out.dropped;
          continue;
        }
        std::vector<geom::Point2> pts;
        for (std::size_t i = 0; i + 1 < seg[0].size(); i += 2) {
          pts.push_back({seg[0][i].get<double>(), seg[0][i + 1].get<double>()});
        }
        try {
          geom::PolygonRing ring = geom::normalize_ring(pts);
          if (ring.size() > kMaxRingVertices) {
            ++out.dropped;
            continue;
          }
          Annotation a{ring, bounds_of(ring), an.value("occluded", false)};
          out.images[it->second].annotations.push_back(std::move(a));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kDegenerateRing) throw;
          ++out.dropped;
        }
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("COCO schema violation: ") + e.what());
  }
  return out;
}

CocoDataset load_coco(const fs::path& path, const std::optional<fs::path>& image_root) {
  return parse_coco(read_file(path), image_root);
}

std::string coco_to_json(const CocoDataset& dataset) {
  json images = json::array(), anns = json::array();
  std::int64_t next_id = 1;
  for (const ImageRecord& rec : dataset.images) {
    images.push_back({{"id", rec.id},
                      {"file_name", rec.file_name},
                      {"width", rec.width},
                      {"height", rec.height}});
    for (const Annotation& a : rec.annotations) {
      json poly = json::array();
      for (const geom::Point2& p : a.ring.vertices()) {
        poly.push_back(p.x);
        poly.push_back(p.y);
      }
      anns.push_back({{"id", next_id++},
                      {"image_id", rec.id},
                      {"category_id", 1},
                      {"segmentation", json::array({poly})},
                      {"bbox", {a.bbox.x0, a.bbox.y0, a.bbox.width(), a.bbox.height()}},
                      {"area", geom::signed_area(a.ring)},
                      {"iscrowd", 0},
                      {"occluded", a.occluded}});
    }
  }
  json doc = {{"images", images},
              {"annotations", anns},
              {"categories", json::array({{{"id", 1}, {"name", "building"}}})}};
  return doc.dump(1) + "\n";
}

Image Dataset::load_image(std::size_t i) const {
  return read_png(root / "images" / coco.images.at(i).file_name);
}

void write_synthetic_dataset(const fs::path& dir, const SceneConfig& config,
                             std::int64_t count, const std::string& config_hash) {
  config.validate();
  std::error_code ec;
  fs::create_directories(dir / "images", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + (dir / "images").string());

  std::vector<Scene> scenes(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    scenes[static_cast<std::size_t>(i)] = generate_scene(config, i);
  }
  CocoDataset coco;
  for (std::int64_t i = 0; i < count; ++i) {
    Scene& s = scenes[static_cast<std::size_t>(i)];
    ImageRecord rec;
    rec.id = i + 1;
    rec.file_name = image_file_name(i);
    rec.width = s.image.width;
    rec.height = s.image.height;
    rec.annotations = std::move(s.annotations);
    write_png(dir / "images" / rec.file_name, s.image);
    coco.images.push_back(std::move(rec));
  }
  const std::string annotations = coco_to_json(coco);
  write_file(dir / "annotations.json", annotations);
  json manifest = {{"format", "p2p-dataset-v1"},
                   {"count", count},
                   {"seed", config.seed},
                   {"scene_config", config},
                   {"config_hash", config_hash},
                   {"annotations_sha256", sha256_hex(annotations)}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset open_dataset(const fs::path& dir) {
  Dataset ds;
  ds.root = dir;
  const fs::path manifest = dir / "manifest.json";
  if (fs::exists(manifest)) ds.manifest_hash = sha256_hex(read_file(manifest));
  ds.coco = load_coco(dir / "annotations.json", dir / "images");
  return ds;
}

#define P2P_SCENE_FIELDS(X)                                                              \
  X(image_size)                                                                          \
  X(min_buildings) X(max_buildings) X(min_vertices) X(max_vertices) X(min_rotation_deg)  \
  X(max_rotation_deg) X(occlusion_rate) X(texture_noise) X(min_building_size)            \
  X(max_building_size) X(seed)

void to_json(json& j, const SceneConfig& c) {
  j = json::object();
#define P2P_PUT(name) j[#name] = c.name;
  P2P_SCENE_FIELDS(P2P_PUT)
#undef P2P_PUT
}

void from_json(const json& j, SceneConfig& c) {
  for (const auto& [key, value] : j.items()) {
#define P2P_GET(name)          \
  if (key == #name) {          \
    value.get_to(c.name);      \
    continue;                  \
  }
    P2P_SCENE_FIELDS(P2P_GET)
#undef P2P_GET
    throw Error(ErrorCode::kInput, "unknown scene config key '" + key + "'");
  }
}

#undef P2P_SCENE_FIELDS

}  // namespace p2p::data
