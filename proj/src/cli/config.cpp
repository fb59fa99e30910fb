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
#include <fstream>
#include <sstream>

#include "p2p/cli/cli.hpp"
#include "p2p/common/error.hpp"
#include "p2p/common/hash.hpp"
#include "p2p/data/json.hpp"
#include "p2p/model/json.hpp"

namespace p2p::cli {

using nlohmann::json;

void to_json(json& j, const EvalConfig& c) {
  j = json{{"iou_thresholds", c.iou_thresholds}, {"max_detections", c.max_detections}};
}

void from_json(const json& j, EvalConfig& c) {
  for (const auto& [key, value] : j.items()) {
    if (key == "iou_thresholds") {
      value.get_to(c.iou_thresholds);
    } else if (key == "max_detections") {
      value.get_to(c.max_detections);
    } else {
      throw Error(ErrorCode::kInput, "unknown eval config key '" + key + "'");
    }
  }
}

void to_json(json& j, const RunConfig& c) {
  j = hashed_form(c);
  j["out"] = c.out;
}

void from_json(const json& j, RunConfig& c) {
  if (!j.is_object()) throw Error(ErrorCode::kInput, "run config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "scene") {
      data::from_json(value, c.scene);
    } else if (key == "model") {
      model::from_json(value, c.model);
    } else if (key == "train") {
      train::from_json(value, c.train);
    } else if (key == "eval") {
      from_json(value, c.eval);
    } else if (key == "out") {
      value.get_to(c.out);
    } else if (key == "deterministic") {
      value.get_to(c.deterministic);
    } else {
      throw Error(ErrorCode::kInput, "unknown run config key '" + key + "'");
    }
  }
}

json hashed_form(const RunConfig& c) {
  return json{{"scene", c.scene},
              {"model", c.model},
              {"train", c.train},
              {"eval", c.eval},
              {"deterministic", c.deterministic}};
}

std::string config_hash(const RunConfig& c) { return sha256_hex(hashed_form(c).dump()); }

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c;
  try {
    json::parse(ss.str()).get_to(c);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, "config " + path.string() + ": " + e.what());
  }
  c.scene.validate();
  c.model.validate();
  c.train.validate();
  return c;
}

}  // namespace p2p::cli
