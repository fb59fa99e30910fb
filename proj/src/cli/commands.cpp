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
#include <map>
#include <ostream>
#include <sstream>

#include "p2p/cli/cli.hpp"
#include "p2p/common/error.hpp"
#include "p2p/model/checkpoint.hpp"
#include "p2p/model/inference.hpp"
#include "render.hpp"

namespace p2p::cli {

using nlohmann::json;
using nn::Tensor;
using nn::Var;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void require_out(const fs::path& out) {
  if (out.empty()) throw Error(ErrorCode::kInput, "an output directory is required (--out)");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) {
    throw Error(ErrorCode::kIo, "cannot create output directory " + out.string());
  }
}

json ring_json(const geom::PolygonRing& ring) {
  json coords = json::array();
  for (const geom::Point2& p : ring.vertices()) coords.push_back({p.x, p.y});
  coords.push_back({ring.vertices().front().x, ring.vertices().front().y});
  return json::array({coords});
}

json box_json(const data::BBox& b) { return {b.x0, b.y0, b.x1, b.y1}; }

data::BBox box_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) {
    throw Error(ErrorCode::kInput, where + ": boxes are [x0, y0, x1, y1]");
  }
  const data::BBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!(b.x1 > b.x0) || !(b.y1 > b.y0)) throw Error(ErrorCode::kInput, where + ": empty box");
  return b;
}

}  // namespace

void cmd_generate(const RunConfig& config, std::int64_t count, const fs::path& out) {
  if (count < 0) throw Error(ErrorCode::kInput, "count must be non-negative");
  config.scene.validate();
  require_out(out);
  data::write_synthetic_dataset(out, config.scene, count, config_hash(config));
}

train::FitResult cmd_train(const TrainArgs& args, std::ostream& log) {
  const RunConfig& cfg = args.config;
  cfg.model.validate();
  cfg.train.validate();
  require_out(args.out);
  const data::Dataset ds = data::open_dataset(args.data);
  std::optional<data::Dataset> val;
  if (args.validation) val = data::open_dataset(*args.validation);

  RunConfig stored = cfg;
  stored.out = args.out.string();
  write_text(args.out / "run_config.json", json(stored).dump(2) + "\n");

  model::Model<float> model(cfg.model, cfg.train.seed);
  train::FitOptions options;
  options.out_dir = args.out;
  options.config_hash = config_hash(cfg);
  options.run_config = hashed_form(cfg);
  options.resume = args.resume;
  options.validation = val ? &*val : nullptr;
  options.on_log = [&log](const json& rec) {
    if (rec.contains("mAP")) {
      log << "epoch " << rec["epoch"] << " step " << rec["step"] << " mAP " << rec["mAP"]
          << " AP50 " << rec["AP50"] << " mean_vertex_error " << rec["mean_vertex_error"] << "\n";
    } else if (rec["step"].get<std::int64_t>() % 100 == 0) {
      log << "step " << rec["step"] << " epoch " << rec["epoch"] << " loss " << rec["loss"]
          << "\n";
    }
    log.flush();
  };
  const train::FitResult r = train::fit(model, ds, cfg.train, options);
  log << "trained " << r.epochs_completed << " epochs, " << r.steps << " steps; final checkpoint "
      << r.final_checkpoint.string() << "\n";
  return r;
}

InferSummary cmd_infer(const InferArgs& args, std::ostream& log) {
  require_out(args.out);
  const model::Checkpoint ckpt = model::read_checkpoint(args.checkpoint);
  const model::Model<float> model = model::load_model(ckpt);
  const std::string hash = ckpt.metadata.value("config_hash", std::string());
  if (args.data.has_value() == args.images.has_value()) {
    throw Error(ErrorCode::kInput, "give exactly one of --data or --images");
  }

  struct Job {
    std::int64_t image_id = 0;
    std::string file_name;
    fs::path path;
    std::vector<data::BBox> boxes;
  };
  std::vector<Job> jobs;
  const bool gt_boxes = args.boxes == "gt";
  std::map<std::int64_t, json> by_id;
  std::map<std::string, json> by_name;
  if (!gt_boxes) {
    json file;
    try {
      file = json::parse(read_text(args.boxes));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, "box file " + args.boxes + ": " + e.what());
    }
    for (const json& e : file.at("images")) {
      if (e.contains("image_id")) by_id[e["image_id"].get<std::int64_t>()] = e;
      if (e.contains("file_name")) by_name[e["file_name"].get<std::string>()] = e;
    }
  }
  auto boxes_of = [&](const json& entry, const std::string& name) {
    std::vector<data::BBox> out;
    for (const json& b : entry.at("boxes")) out.push_back(box_from_json(b, name));
    return out;
  };
  if (args.data) {
    const data::Dataset ds = data::open_dataset(*args.data);
    for (const data::ImageRecord& rec : ds.coco.images) {
      Job job{rec.id, rec.file_name, ds.root / "images" / rec.file_name, {}};
      if (gt_boxes) {
        for (const auto& a : rec.annotations) job.boxes.push_back(a.bbox);
      } else {
        auto it = by_id.find(rec.id);
        if (it == by_id.end()) {
          throw Error(ErrorCode::kInput, "no boxes for image " + rec.file_name + " (id " +
                                             std::to_string(rec.id) + ")");
        }
        job.boxes = boxes_of(it->second, rec.file_name);
      }
      jobs.push_back(std::move(job));
    }
  } else {
    if (gt_boxes) throw Error(ErrorCode::kInput, "--images needs a box file (--boxes FILE)");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(*args.images)) {
      if (e.path().extension() == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (std::size_t i = 0; i < files.size(); ++i) {
      const std::string name = files[i].filename().string();
      auto it = by_name.find(name);
      if (it == by_name.end()) throw Error(ErrorCode::kInput, "no boxes for image " + name);
      jobs.push_back({it->second.value("image_id", static_cast<std::int64_t>(i + 1)), name,
                      files[i], boxes_of(it->second, name)});
    }
  }

  const std::int64_t n = static_cast<std::int64_t>(jobs.size());
  std::vector<std::vector<model::BuildingPrediction>> results(static_cast<std::size_t>(n));
  std::vector<std::string> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    const Job& job = jobs[static_cast<std::size_t>(i)];
    try {
      const data::Image image = data::read_png(job.path);
      results[static_cast<std::size_t>(i)] = model::infer_image(model, image, job.boxes);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = job.file_name + ": " + e.what();
    }
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw Error(ErrorCode::kInput, "inference failed for " + e);
  }

  InferSummary summary;
  summary.images = n;
  json features = json::array();
  std::vector<eval::InstancePrediction> instances;
  const std::string kind(geom::to_string(model.config().kind));
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (jobs[i].boxes.empty()) summary.empty_images.push_back(jobs[i].image_id);
    for (std::size_t b = 0; b < results[i].size(); ++b) {
      const model::BuildingPrediction& p = results[i][b];
      ++summary.buildings;
      if (!p.polygon.accepted) {
        ++summary.rejected;
        continue;
      }
      ++summary.accepted;
      instances.push_back({-1, jobs[i].image_id, p.polygon.ring, p.polygon.score});
      features.push_back(
          {{"type", "Feature"},
           {"geometry", {{"type", "Polygon"}, {"coordinates", ring_json(p.polygon.ring)}}},
           {"properties",
            {{"image_id", jobs[i].image_id},
             {"file_name", jobs[i].file_name},
             {"box_index", b},
             {"box", box_json(jobs[i].boxes[b])},
             {"score", p.polygon.score},
             {"primitive_kind", kind},
             {"orders", p.polygon.orders},
             {"config_hash", hash}}}});
    }
  }
  const json collection{{"type", "FeatureCollection"},
                        {"properties",
                         {{"coordinates", "image pixels, x right, y down"},
                          {"config_hash", hash}}},
                        {"features", features}};
  write_text(args.out / "predictions.geojson", collection.dump() + "\n");
  write_text(args.out / "results.json", eval::results_to_json(instances, hash));
  const json s{{"images", summary.images},
               {"buildings", summary.buildings},
               {"accepted", summary.accepted},
               {"rejected", summary.rejected},
               {"images_without_boxes", summary.empty_images},
               {"config_hash", hash}};
  write_text(args.out / "summary.json", s.dump(2) + "\n");
  log << summary.images << " images, " << summary.buildings << " buildings, " << summary.accepted
      << " polygons, " << summary.rejected << " rejected";
  if (!summary.empty_images.empty()) {
    log << ", " << summary.empty_images.size() << " images without boxes";
  }
  log << "\n";
  return summary;
}

eval::MetricsReport cmd_eval(const EvalArgs& args, std::ostream& log) {
  require_out(args.out);
  const eval::ResultsFile preds = eval::parse_results(read_text(args.predictions));
  if (preds.config_hashes.size() > 1 && !args.force) {
    std::string list;
    for (const auto& h : preds.config_hashes) list += (list.empty() ? "" : ", ") + h;
    throw Error(ErrorCode::kInput,
                "predictions come from several configurations (" + list + "); use --force");
  }
  const data::CocoDataset gt = fs::is_directory(args.ground_truth)
                                   ? data::open_dataset(args.ground_truth).coco
                                   : data::load_coco(args.ground_truth);
  eval::EvalOptions options;
  options.iou_thresholds = args.options.iou_thresholds;
  options.max_detections = args.options.max_detections;
  const eval::MetricsReport r = eval::evaluate(preds.predictions, gt, options);
  std::string hash;
  for (const auto& h : preds.config_hashes) hash += (hash.empty() ? "" : "+") + h;
  write_text(args.out / "metrics.json", eval::metrics_to_json(r, hash));
  write_text(args.out / "pr_curves.csv", eval::pr_curves_csv(r));
  std::vector<std::vector<std::pair<double, double>>> curves;
  for (const auto& row : r.precision) {
    std::vector<std::pair<double, double>> c;
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k] >= 0) c.emplace_back(r.recall_thresholds[k], row[k]);
    }
    curves.push_back(std::move(c));
  }
  data::write_png(args.out / "pr_curves.png", plot_curves(curves, 320));
  log << eval::metrics_table(r);
  return r;
}

std::vector<fs::path> cmd_inspect(const InspectArgs& args) {
  require_out(args.out);
  const model::Checkpoint ckpt = model::read_checkpoint(args.checkpoint);
  const model::Model<float> model = model::load_model(ckpt);
  const model::ModelConfig& cfg = model.config();
  const data::Image image = data::read_png(args.image);
  const data::BBox& b = args.roi;
  if (!std::isfinite(b.x0) || !std::isfinite(b.y0) || !std::isfinite(b.x1) ||
      !std::isfinite(b.y1) || !(b.x1 > b.x0) || !(b.y1 > b.y0) || b.x1 <= 0 || b.y1 <= 0 ||
      b.x0 >= image.width || b.y0 >= image.height) {
    throw Error(ErrorCode::kInput, "ROI must be a non-empty box overlapping the image");
  }
  const data::RoiSpec roi = data::make_roi(b, cfg.roi_expansion, image.width, image.height);

  nn::NoGradGuard guard;
  Tensor<float> attention;
  model::ForwardOptions<float> opts;
  opts.final_attention = &attention;
  const Var<float> feature = model.backbone(Var<float>(model::image_tensor<float>(image)));
  const model::PrimitiveOutput<float> out = model.forward_roi(feature, roi, opts);
  const model::DecodedPrimitives decoded = model::decode(out, roi, cfg);
  const model::PolygonResult poly = model::infer_polygon(decoded, cfg);

  const int n = cfg.queries, rows = cfg.rows_per_primitive();
  std::vector<int> selected = args.primitives;
  if (selected.empty()) {
    for (std::size_t k : poly.kept) selected.push_back(static_cast<int>(k));
  }
  for (int p : selected) {
    if (p < 0 || p >= n) {
      throw Error(ErrorCode::kInput, "primitive index " + std::to_string(p) + " outside [0, " +
                                         std::to_string(n) + ")");
    }
  }

  const std::int64_t tokens = attention.dim(1);
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(tokens))));
  const int rh = std::max(1, static_cast<int>(std::ceil(roi.box.height())));
  const int rw = std::max(1, static_cast<int>(std::ceil(roi.box.width())));
  std::vector<fs::path> files;
  json prims = json::array();
  for (int p : selected) {
    json entry{{"index", p},
               {"foreground", decoded.foreground[static_cast<std::size_t>(p)]},
               {"order", decoded.orders[static_cast<std::size_t>(p)]}};
    json maps = json::array();
    for (int q = 0; q < rows; ++q) {
      const float* row = attention.data() + static_cast<std::int64_t>(p * rows + q) * tokens;
      std::vector<float> grid(row, row + tokens);
      const float mx = *std::max_element(grid.begin(), grid.end());
      if (mx > 0) {
        for (float& v : grid) v /= mx;
      }
      data::Image heat = resample(grid, side, side, rh, rw);
      for (int y = 0; y < rh; ++y) {
        for (int x = 0; x < rw; ++x) {
          const int iy = std::clamp(static_cast<int>(roi.box.y0) + y, 0, image.height - 1);
          const int ix = std::clamp(static_cast<int>(roi.box.x0) + x, 0, image.width - 1);
          float& v = heat.pixels[static_cast<std::size_t>(y * rw + x)];
          v = 0.75f * v + 0.25f * image.at(iy, ix);
        }
      }
      const auto& pts = decoded.primitives[static_cast<std::size_t>(p)].pts();
      const geom::Point2 focus = pts[static_cast<std::size_t>(std::min<int>(q, static_cast<int>(pts.size()) - 1))];
      draw_dot(heat, {focus.x - roi.box.x0, focus.y - roi.box.y0}, 1, 1.0f);
      char name[48];
      std::snprintf(name, sizeof(name), "attention_p%02d_q%d.png", p, q);
      data::write_png(args.out / name, heat);
      files.push_back(args.out / name);
      maps.push_back(name);
    }
    json points = json::array();
    for (const auto& pt : decoded.primitives[static_cast<std::size_t>(p)].pts()) {
      points.push_back({pt.x, pt.y});
    }
    entry["points"] = points;
    entry["heatmaps"] = maps;
    prims.push_back(entry);
  }

  data::Image overlay = image;
  for (float& v : overlay.pixels) v *= 0.5f;
  draw_box(overlay, roi.box, 0.75f);
  if (poly.accepted) draw_ring(overlay, poly.ring, 1.0f);
  for (int p : selected) {
    for (const auto& pt : decoded.primitives[static_cast<std::size_t>(p)].pts()) {
      draw_dot(overlay, pt, 1, 1.0f);
    }
  }
  data::write_png(args.out / "overlay.png", overlay);
  files.push_back(args.out / "overlay.png");

  json summary{{"config_hash", ckpt.metadata.value("config_hash", std::string())},
               {"roi", box_json(roi.box)},
               {"primitive_kind", std::string(geom::to_string(cfg.kind))},
               {"accepted", poly.accepted},
               {"score", poly.score},
               {"primitives", prims}};
  if (poly.accepted) summary["polygon"] = ring_json(poly.ring);
  write_text(args.out / "inspect.json", summary.dump(2) + "\n");
  files.push_back(args.out / "inspect.json");
  return files;
}

}  // namespace p2p::cli
