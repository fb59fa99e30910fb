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

// Command implementations behind the `p2p` executable.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include "p2p/data/data.hpp"
#include "p2p/eval/eval.hpp"
#include "p2p/model/model.hpp"
#include "p2p/train/train.hpp"

namespace p2p::cli {

namespace fs = std::filesystem;

struct EvalConfig {
  std::vector<double> iou_thresholds;  // empty: COCO 0.50:0.05:0.95
  int max_detections = 100;
};

// One document for every command. Sections may be partial; missing keys
// keep their defaults.
struct RunConfig {
  data::SceneConfig scene;
  model::ModelConfig model;
  train::TrainConfig train;
  EvalConfig eval;
  std::string out;
  bool deterministic = false;
};

void to_json(nlohmann::json& j, const EvalConfig& c);
void from_json(const nlohmann::json& j, EvalConfig& c);
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

RunConfig load_run_config(const fs::path& path);
// Serialized form without the output directory.
nlohmann::json hashed_form(const RunConfig& c);
std::string config_hash(const RunConfig& c);

void cmd_generate(const RunConfig& config, std::int64_t count, const fs::path& out);

struct TrainArgs {
  RunConfig config;
  fs::path data;
  std::optional<fs::path> validation;
  std::optional<fs::path> resume;
  fs::path out;
};
train::FitResult cmd_train(const TrainArgs& args, std::ostream& log);

struct InferArgs {
  fs::path checkpoint;
  std::optional<fs::path> data;    // dataset directory
  std::optional<fs::path> images;  // directory of PNGs; needs a box file
  std::string boxes = "gt";        // "gt" or a box file path
  fs::path out;
};
struct InferSummary {
  std::int64_t images = 0;
  std::int64_t buildings = 0;
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::vector<std::int64_t> empty_images;  // ids of images with no boxes
};
// Writes predictions.geojson, results.json and summary.json.
InferSummary cmd_infer(const InferArgs& args, std::ostream& log);

struct EvalArgs {
  fs::path predictions;
  fs::path ground_truth;  // dataset directory or COCO file
  fs::path out;
  bool force = false;
  EvalConfig options;
};
// Writes metrics.json, pr_curves.csv and pr_curves.png; prints the table.
eval::MetricsReport cmd_eval(const EvalArgs& args, std::ostream& log);

struct InspectArgs {
  fs::path checkpoint;
  fs::path image;
  data::BBox roi;
  fs::path out;
  std::vector<int> primitives;  // empty: every surviving primitive
};
// Attention heatmaps per group query, a polygon overlay and inspect.json.
std::vector<fs::path> cmd_inspect(const InspectArgs& args);

// Parses argv and dispatches; returns the process exit code.
int run(int argc, char** argv);

}  // namespace p2p::cli
