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
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include <json.hpp>
#include "p2p/cli/cli.hpp"
#include "p2p/common/error.hpp"

using namespace p2p;
using namespace p2p::cli;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("p2p_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

RunConfig tiny_run(geom::PrimitiveKind kind = geom::PrimitiveKind::kCorner) {
  RunConfig c;
  c.scene.image_size = 64;
  c.scene.max_buildings = 2;
  c.scene.max_vertices = 8;
  c.scene.min_building_size = 16;
  c.scene.max_building_size = 30;
  c.scene.seed = 3;
  c.model.kind = kind;
  c.model.channels = 8;
  c.model.heads = 2;
  c.model.queries = 10;
  c.model.roi_size = 8;
  c.model.decoder_blocks = 2;
  c.model.order_layers = 1;
  c.train.epochs = 1;
  c.train.lr = 1e-3;
  c.deterministic = true;
  return c;
}

int run_args(std::vector<std::string> args) {
  args.insert(args.begin(), "p2p");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

template <typename F>
void expect_error(ErrorCode code, F&& f) {
  try {
    f();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

std::size_t count_files(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ext;
  return n;
}

}  // namespace

TEST_CASE("run config JSON and hash") {
  RunConfig c = tiny_run();
  c.out = "somewhere";
  const json j = c;
  const RunConfig back = j.get<RunConfig>();
  CHECK(json(back) == j);
  RunConfig moved = c;
  moved.out = "elsewhere";
  CHECK(config_hash(moved) == config_hash(c));
  moved.train.lr = 2e-3;
  CHECK(config_hash(moved) != config_hash(c));
  expect_error(ErrorCode::kInput, [] { json{{"bogus", 1}}.get<RunConfig>(); });
  expect_error(ErrorCode::kInput, [] { json{{"model", {{"bogus", 1}}}}.get<RunConfig>(); });

  TempDir tmp("cfg");
  spit(tmp.path / "partial.json", R"({"train": {"epochs": 3}})");
  const RunConfig partial = load_run_config(tmp.path / "partial.json");
  CHECK(partial.train.epochs == 3);
  CHECK(partial.model.queries == 30);
  spit(tmp.path / "broken.json", "{");
  expect_error(ErrorCode::kParse, [&] { load_run_config(tmp.path / "broken.json"); });
}

TEST_CASE("generate") {
  TempDir tmp("gen");
  const RunConfig c = tiny_run();
  cmd_generate(c, 10, tmp.path / "a");
  CHECK(count_files(tmp.path / "a" / "images", ".png") == 10);
  CHECK(fs::exists(tmp.path / "a" / "annotations.json"));
  CHECK(fs::exists(tmp.path / "a" / "manifest.json"));
  cmd_generate(c, 10, tmp.path / "b");
  CHECK(slurp(tmp.path / "a" / "annotations.json") == slurp(tmp.path / "b" / "annotations.json"));
  CHECK(slurp(tmp.path / "a" / "manifest.json") == slurp(tmp.path / "b" / "manifest.json"));
  const auto manifest = json::parse(slurp(tmp.path / "a" / "manifest.json"));
  CHECK(manifest.dump().find(config_hash(c)) != std::string::npos);

  cmd_generate(c, 0, tmp.path / "empty");
  CHECK(data::open_dataset(tmp.path / "empty").size() == 0);
}

TEST_CASE("train, infer, eval and inspect") {
  TempDir tmp("pipeline");
  const RunConfig c = tiny_run();
  cmd_generate(c, 4, tmp.path / "data");
  std::ostringstream log;

  TrainArgs ta;
  ta.config = c;
  ta.data = tmp.path / "data";
  ta.validation = tmp.path / "data";
  ta.out = tmp.path / "run";
  const train::FitResult fr = cmd_train(ta, log);
  CHECK(fr.checkpoints.size() >= 2);
  CHECK(fs::exists(tmp.path / "run" / "train_log.jsonl"));
  CHECK(fs::exists(tmp.path / "run" / "metrics.csv"));
  CHECK(fs::exists(tmp.path / "run" / "run_config.json"));

  TrainArgs again = ta;
  again.resume = fr.final_checkpoint;
  again.out = tmp.path / "run2";
  const train::FitResult fr2 = cmd_train(again, log);
  CHECK(fr2.checkpoints.empty());
  CHECK(fr2.steps == fr.steps);

  TrainArgs other = again;
  other.config.train.lr = 5e-3;
  expect_error(ErrorCode::kResume, [&] { cmd_train(other, log); });

  SUBCASE("infer") {
    InferArgs ia;
    ia.checkpoint = fr.final_checkpoint;
    ia.data = tmp.path / "data";
    ia.out = tmp.path / "infer1";
    const InferSummary s = cmd_infer(ia, log);
    CHECK(s.images == 4);
    CHECK(s.accepted + s.rejected == s.buildings);
    ia.out = tmp.path / "infer2";
    cmd_infer(ia, log);
    CHECK(slurp(tmp.path / "infer1" / "predictions.geojson") ==
          slurp(tmp.path / "infer2" / "predictions.geojson"));
    const auto gj = json::parse(slurp(tmp.path / "infer1" / "predictions.geojson"));
    CHECK(gj.at("type") == "FeatureCollection");
    CHECK(gj.at("features").size() == static_cast<std::size_t>(s.accepted));
    for (const auto& f : gj.at("features")) {
      CHECK(f.at("geometry").at("type") == "Polygon");
      CHECK(f.at("properties").at("primitive_kind") == "corner");
      CHECK(f.at("properties").contains("orders"));
      CHECK(f.at("properties").contains("score"));
    }

    const data::Dataset ds = data::open_dataset(tmp.path / "data");
    json boxes{{"images", json::array()}};
    for (std::size_t i = 0; i < ds.size(); ++i) {
      json list = json::array();
      if (i != 0) {
        for (const auto& a : ds.coco.images[i].annotations) {
          list.push_back({a.bbox.x0, a.bbox.y0, a.bbox.x1, a.bbox.y1});
        }
      }
      boxes["images"].push_back({{"image_id", ds.coco.images[i].id},
                                 {"file_name", ds.coco.images[i].file_name},
                                 {"boxes", list}});
    }
    spit(tmp.path / "boxes.json", boxes.dump());
    ia.boxes = (tmp.path / "boxes.json").string();
    ia.out = tmp.path / "infer3";
    const InferSummary s3 = cmd_infer(ia, log);
    REQUIRE(s3.empty_images.size() == 1);
    CHECK(s3.empty_images[0] == ds.coco.images[0].id);
    CHECK(log.str().find("without boxes") != std::string::npos);

    ia.data.reset();
    ia.images = tmp.path / "data" / "images";
    ia.out = tmp.path / "infer4";
    CHECK(cmd_infer(ia, log).images == 4);

    boxes["images"].erase(boxes["images"].begin() + 1);
    spit(tmp.path / "boxes.json", boxes.dump());
    try {
      cmd_infer(ia, log);
      FAIL("expected an input error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInput);
      CHECK(std::string(e.what()).find(ds.coco.images[1].file_name) != std::string::npos);
    }
  }

  SUBCASE("eval") {
    const data::Dataset ds = data::open_dataset(tmp.path / "data");
    std::vector<eval::InstancePrediction> gt_preds;
    for (const auto& im : ds.coco.images) {
      for (const auto& a : im.annotations) gt_preds.push_back({-1, im.id, a.ring, 1.0});
    }
    spit(tmp.path / "gt_preds.json", eval::results_to_json(gt_preds, "h1"));
    EvalArgs ea;
    ea.predictions = tmp.path / "gt_preds.json";
    ea.ground_truth = tmp.path / "data";
    ea.out = tmp.path / "eval1";
    std::ostringstream table;
    const eval::MetricsReport r = cmd_eval(ea, table);
    CHECK(r.map == doctest::Approx(1.0));
    CHECK(table.str().find("1.000") != std::string::npos);
    CHECK(fs::exists(tmp.path / "eval1" / "metrics.json"));
    CHECK(fs::exists(tmp.path / "eval1" / "pr_curves.csv"));
    CHECK(fs::exists(tmp.path / "eval1" / "pr_curves.png"));

    spit(tmp.path / "none.json", "[]");
    ea.predictions = tmp.path / "none.json";
    const eval::MetricsReport z = cmd_eval(ea, table);
    CHECK(z.map == 0.0);
    CHECK(z.ap50 == 0.0);

    auto mixed = json::parse(eval::results_to_json(gt_preds, "h1"));
    mixed[0]["config_hash"] = "h2";
    spit(tmp.path / "mixed.json", mixed.dump());
    ea.predictions = tmp.path / "mixed.json";
    expect_error(ErrorCode::kInput, [&] { cmd_eval(ea, table); });
    ea.force = true;
    CHECK(cmd_eval(ea, table).ap50 > 0.9);
  }

  SUBCASE("inspect") {
    const data::Dataset ds = data::open_dataset(tmp.path / "data");
    InspectArgs ia;
    ia.checkpoint = fr.final_checkpoint;
    ia.image = tmp.path / "data" / "images" / ds.coco.images[0].file_name;
    ia.roi = ds.coco.images[0].annotations[0].bbox;
    ia.primitives = {0, 3};
    ia.out = tmp.path / "inspect1";
    const auto files = cmd_inspect(ia);
    CHECK(count_files(ia.out, ".png") == 2 * 3 + 1);
    CHECK(fs::exists(ia.out / "attention_p03_q2.png"));
    ia.out = tmp.path / "inspect2";
    cmd_inspect(ia);
    for (const char* name : {"attention_p00_q0.png", "overlay.png", "inspect.json"}) {
      CHECK(slurp(tmp.path / "inspect1" / name) == slurp(tmp.path / "inspect2" / name));
    }
    ia.roi = {500, 500, 520, 530};
    expect_error(ErrorCode::kInput, [&] { cmd_inspect(ia); });
    ia.roi = ds.coco.images[0].annotations[0].bbox;
    ia.primitives = {99};
    expect_error(ErrorCode::kInput, [&] { cmd_inspect(ia); });
  }
}

TEST_CASE("inspect renders one heatmap per primitive for vertex models") {
  TempDir tmp("vertex");
  RunConfig c = tiny_run(geom::PrimitiveKind::kVertex);
  c.train.epochs = 0;
  cmd_generate(c, 1, tmp.path / "data");
  TrainArgs ta;
  ta.config = c;
  ta.data = tmp.path / "data";
  ta.out = tmp.path / "run";
  std::ostringstream log;
  const train::FitResult fr = cmd_train(ta, log);
  const data::Dataset ds = data::open_dataset(tmp.path / "data");
  InspectArgs ia;
  ia.checkpoint = fr.final_checkpoint;
  ia.image = tmp.path / "data" / "images" / ds.coco.images[0].file_name;
  ia.roi = ds.coco.images[0].annotations[0].bbox;
  ia.primitives = {0, 1, 2};
  ia.out = tmp.path / "inspect";
  cmd_inspect(ia);
  CHECK(count_files(ia.out, ".png") == 3 + 1);
}

TEST_CASE("command-line exit codes") {
  TempDir tmp("argv");
  const std::string out = (tmp.path / "d").string();
  CHECK(run_args({"generate", "--count", "2", "--out", out, "--seed", "4"}) == 0);
  CHECK(count_files(fs::path(out) / "images", ".png") == 2);
  CHECK(run_args({"generate", "--count", "-1", "--out", out}) != 0);
  CHECK(run_args({"generate", "--out", out}) != 0);
  CHECK(run_args({"bogus"}) != 0);
  CHECK(run_args({"train", "--data", (tmp.path / "missing").string(), "--out",
                  (tmp.path / "r").string()}) != 0);
  CHECK(run_args({"eval", "--predictions", (tmp.path / "missing.json").string(), "--gt", out,
                  "--out", (tmp.path / "e").string()}) != 0);
  CHECK(run_args({"generate", "--config", (tmp.path / "missing.json").string(), "--count", "1",
                  "--out", out}) != 0);
}
