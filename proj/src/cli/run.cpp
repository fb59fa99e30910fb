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
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "p2p/cli/cli.hpp"
#include "p2p/common/error.hpp"
#include "p2p/common/parallel.hpp"

namespace p2p::cli {

namespace {

struct Shared {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::string out;
};

void add_shared(CLI::App* app, Shared& s) {
  app->add_option("--config", s.config, "Run configuration JSON");
  app->add_option("--seed", s.seed, "Seed for scene generation and training");
  app->add_flag("--deterministic", s.deterministic, "Record deterministic mode in the config");
  app->add_option("--out", s.out, "Output directory");
}

RunConfig resolve(const Shared& s) {
  RunConfig c = s.config.empty() ? RunConfig{} : load_run_config(s.config);
  if (s.seed) {
    c.scene.seed = *s.seed;
    c.train.seed = *s.seed;
  }
  if (s.deterministic) c.deterministic = true;
  if (!s.out.empty()) c.out = s.out;
  return c;
}

data::BBox parse_box(const std::string& text) {
  data::BBox b;
  char c1 = 0, c2 = 0, c3 = 0;
  std::istringstream in(text);
  in >> b.x0 >> c1 >> b.y0 >> c2 >> b.x1 >> c3 >> b.y1;
  if (!in || c1 != ',' || c2 != ',' || c3 != ',') {
    throw Error(ErrorCode::kInput, "--roi expects x0,y0,x1,y1");
  }
  return b;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Primitive-based building polygon extraction"};
  app.require_subcommand(1);

  Shared gen_s, train_s, infer_s, eval_s, inspect_s;
  std::int64_t count = 0;
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset");
  add_shared(gen, gen_s);
  gen->add_option("--count", count, "Number of scenes")->required();

  std::string train_data, train_val, train_resume;
  auto* tr = app.add_subcommand("train", "Train a model");
  add_shared(tr, train_s);
  tr->add_option("--data", train_data, "Training dataset directory")->required();
  tr->add_option("--val", train_val, "Validation dataset directory");
  tr->add_option("--resume", train_resume, "Checkpoint to resume from");

  InferArgs infer_args;
  std::string infer_data, infer_images;
  auto* inf = app.add_subcommand("infer", "Predict polygons for given boxes");
  add_shared(inf, infer_s);
  inf->add_option("--checkpoint", infer_args.checkpoint, "Checkpoint file")->required();
  inf->add_option("--data", infer_data, "Dataset directory");
  inf->add_option("--images", infer_images, "Directory of PNG images");
  inf->add_option("--boxes", infer_args.boxes, "'gt' or a box file");

  EvalArgs eval_args;
  std::string eval_pred, eval_gt;
  auto* ev = app.add_subcommand("eval", "COCO-style metrics for predictions");
  add_shared(ev, eval_s);
  ev->add_option("--predictions", eval_pred, "COCO results JSON")->required();
  ev->add_option("--gt,--data", eval_gt, "Dataset directory or COCO annotation file")->required();
  ev->add_flag("--force", eval_args.force, "Accept predictions from several configurations");

  InspectArgs inspect_args;
  std::string inspect_roi;
  auto* ins = app.add_subcommand("inspect", "Render attention maps and an overlay for one ROI");
  add_shared(ins, inspect_s);
  ins->add_option("--checkpoint", inspect_args.checkpoint, "Checkpoint file")->required();
  ins->add_option("--image", inspect_args.image, "PNG image")->required();
  ins->add_option("--roi", inspect_roi, "Building box x0,y0,x1,y1")->required();
  ins->add_option("--primitives", inspect_args.primitives, "Primitive indices to render")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    configure_workers();
    if (gen->parsed()) {
      const RunConfig c = resolve(gen_s);
      cmd_generate(c, count, c.out);
      std::cout << "wrote " << count << " scenes to " << c.out << "\n";
    } else if (tr->parsed()) {
      TrainArgs a;
      a.config = resolve(train_s);
      a.data = train_data;
      if (!train_val.empty()) a.validation = train_val;
      if (!train_resume.empty()) a.resume = train_resume;
      a.out = a.config.out;
      cmd_train(a, std::cout);
    } else if (inf->parsed()) {
      infer_args.out = resolve(infer_s).out;
      if (!infer_data.empty()) infer_args.data = infer_data;
      if (!infer_images.empty()) infer_args.images = infer_images;
      cmd_infer(infer_args, std::cout);
    } else if (ev->parsed()) {
      const RunConfig c = resolve(eval_s);
      eval_args.predictions = eval_pred;
      eval_args.ground_truth = eval_gt;
      eval_args.out = c.out;
      eval_args.options = c.eval;
      cmd_eval(eval_args, std::cout);
    } else if (ins->parsed()) {
      inspect_args.out = resolve(inspect_s).out;
      inspect_args.roi = parse_box(inspect_roi);
      const auto files = cmd_inspect(inspect_args);
      std::cout << "wrote " << files.size() << " files to " << inspect_args.out.string() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "p2p: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "p2p: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace p2p::cli
