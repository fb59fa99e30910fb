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

// Bipartite matching, set-prediction losses, the optimisation step and the
// epoch loop with checkpointing and resumption.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "p2p/data/data.hpp"
#include "p2p/eval/eval.hpp"
#include "p2p/model/checkpoint.hpp"
#include "p2p/model/model.hpp"
#include "p2p/nn/optim.hpp"

namespace p2p::train {

using nn::Tensor;
using nn::Var;

struct TrainConfig {
  double lr = 1e-4;
  int lr_decay_epoch = 0;  // lr is multiplied by 0.1 from this epoch on; 0 disables
  int epochs = 1;
  int batch_size = 1;      // images per step
  double lambda1 = 5.0;
  double lambda2 = 1.0;
  double alpha = 1.0;
  double beta = 0.1;
  double weight_decay = 1e-4;
  double clip_norm = 0.1;
  bool roi_jitter = true;
  bool aux_loss = false;   // experimental: supervise every decoder block
  int checkpoint_every = 1;  // epochs; the final epoch is always saved
  int eval_every = 0;        // epochs; 0 disables validation
  std::uint64_t seed = 0;

  void validate() const;
};

// N x M grid (row-major): lambda1 * L1(P_i, T_j) - lambda2 * p_fg_i.
struct CostGrid {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  double operator()(int i, int j) const { return values[static_cast<std::size_t>(i) * cols + j]; }
  double& operator()(int i, int j) { return values[static_cast<std::size_t>(i) * cols + j]; }
};

CostGrid matching_cost(const Tensor<double>& points, std::span<const double> foreground,
                       const data::TrainingTarget& target, double lambda1, double lambda2);

struct MatchResult {
  // Permutation of [0, N); prediction i is matched to target sigma[i] when
  // sigma[i] < targets.
  std::vector<int> sigma;
  int targets = 0;
  bool truncated = false;  // more targets than predictions; extra targets dropped

  bool matched(int i) const { return sigma[static_cast<std::size_t>(i)] < targets; }
  int matched_count() const;
};

// Minimum-cost assignment of min(N, M) targets to distinct predictions.
MatchResult hungarian(const CostGrid& cost);

template <typename T>
struct LossTerms {
  Var<T> total, seg_reg, seg_cls, order;
};

struct LossReport {
  double total = 0.0;
  double seg_reg = 0.0;
  double seg_cls = 0.0;
  double order = 0.0;
};

template <typename T>
LossReport report_of(const LossTerms<T>& terms);

// (seg_reg, seg_cls) with divisor N.
template <typename T>
std::pair<Var<T>, Var<T>> seg_loss(const model::PrimitiveOutput<T>& out,
                                   const data::TrainingTarget& target, const MatchResult& match);
// Mean cross-entropy over matched predictions; zero without matches.
template <typename T>
Var<T> order_loss(const Var<T>& order_logits, const data::TrainingTarget& target,
                  const MatchResult& match);
template <typename T>
LossTerms<T> total_loss(const Var<T>& seg_reg, const Var<T>& seg_cls, const Var<T>& order,
                        const TrainConfig& cfg);

// Matching (detached) and losses for one building.
template <typename T>
LossTerms<T> building_loss(const model::PrimitiveOutput<T>& out,
                           const data::TrainingTarget& target, const TrainConfig& cfg,
                           MatchResult* match = nullptr);

struct TrainSample {
  const data::Image* image = nullptr;
  std::vector<data::RoiSpec> rois;
  std::vector<data::TrainingTarget> targets;
};

// ROIs and targets for every usable annotation of an image. Buildings whose
// targets cannot be built are skipped and counted in `skipped`.
TrainSample make_sample(const data::Image& image, const data::ImageRecord& record,
                        const model::ModelConfig& model_cfg, std::mt19937_64* jitter,
                        int* skipped = nullptr);

struct StepReport {
  LossReport loss;
  double grad_norm = 0.0;
  int buildings = 0;
};

// Batch loss is the mean over buildings in the batch.
template <typename T>
LossTerms<T> batch_loss(const model::Model<T>& model, std::span<const TrainSample> batch,
                        const TrainConfig& cfg, int* buildings = nullptr);

// Forward, losses, backward and one AdamW update at `lr`. Throws kNumeric
// (with loss parts in the message) on a non-finite loss.
StepReport train_step(model::Model<float>& model, nn::AdamW<float>& optimizer,
                      std::span<const TrainSample> batch, const TrainConfig& cfg, double lr);

double learning_rate(const TrainConfig& cfg, int epoch);

// Mean distance between predicted and ground-truth vertices under an optimal
// one-to-one assignment (min(V_pred, V_gt) pairs).
double matched_vertex_error(const geom::PolygonRing& predicted, const geom::PolygonRing& truth);

struct Predictions {
  std::vector<eval::InstancePrediction> instances;
  std::int64_t buildings = 0;
  std::int64_t rejected = 0;
  double mean_vertex_error = 0.0;  // over accepted buildings
};

// Inference with ground-truth boxes over a whole dataset.
Predictions predict_dataset(const model::Model<float>& model, const data::Dataset& dataset);

struct FitOptions {
  std::filesystem::path out_dir;
  std::string config_hash;
  nlohmann::json run_config = nlohmann::json::object();
  std::optional<std::filesystem::path> resume;
  const data::Dataset* validation = nullptr;
  std::function<void(const nlohmann::json&)> on_log;  // receives every log record
};

struct FitResult {
  std::filesystem::path final_checkpoint;
  std::vector<std::filesystem::path> checkpoints;
  std::int64_t steps = 0;
  int epochs_completed = 0;
};

// Checkpoint with parameters, optimiser state and training position.
model::Checkpoint training_checkpoint(const model::Model<float>& model,
                                      const nn::AdamW<float>& optimizer, int epoch,
                                      std::int64_t step, const FitOptions& options,
                                      const std::string& manifest_hash,
                                      const TrainConfig& cfg);

FitResult fit(model::Model<float>& model, const data::Dataset& dataset, const TrainConfig& cfg,
              const FitOptions& options);

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

}  // namespace p2p::train
