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
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "p2p/common/error.hpp"
#include "p2p/common/hash.hpp"
#include "p2p/model/inference.hpp"
#include "p2p/model/json.hpp"
#include "p2p/train/train.hpp"

namespace p2p::train {

using nlohmann::json;

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInput, "train config: " + what); };
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail("lr must be non-negative");
  if (lr_decay_epoch < 0) fail("lr_decay_epoch must be non-negative");
  if (epochs < 0) fail("epochs must be non-negative");
  if (batch_size < 1) fail("batch_size must be positive");
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0) || !(alpha > 0.0)) fail("loss weights must be positive");
  if (!(beta >= 0.0)) fail("beta must be non-negative");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be non-negative");
  if (!(clip_norm >= 0.0)) fail("clip_norm must be non-negative");
  if (checkpoint_every < 1) fail("checkpoint_every must be positive");
  if (eval_every < 0) fail("eval_every must be non-negative");
}

#define P2P_TRAIN_FIELDS(X)                                                                 \
  X(lr) X(lr_decay_epoch) X(epochs) X(batch_size) X(lambda1) X(lambda2) X(alpha) X(beta)    \
  X(weight_decay) X(clip_norm) X(roi_jitter) X(aux_loss) X(checkpoint_every) X(eval_every)  \
  X(seed)

void to_json(json& j, const TrainConfig& c) {
  j = json::object();
#define P2P_PUT(name) j[#name] = c.name;
  P2P_TRAIN_FIELDS(P2P_PUT)
#undef P2P_PUT
}

void from_json(const json& j, TrainConfig& c) {
  for (const auto& [key, value] : j.items()) {
#define P2P_GET(name)     \
  if (key == #name) {     \
    value.get_to(c.name); \
    continue;             \
  }
    P2P_TRAIN_FIELDS(P2P_GET)
#undef P2P_GET
    throw Error(ErrorCode::kInput, "unknown train config key '" + key + "'");
  }
}

#undef P2P_TRAIN_FIELDS

TrainSample make_sample(const data::Image& image, const data::ImageRecord& record,
                        const model::ModelConfig& model_cfg, std::mt19937_64* jitter,
                        int* skipped) {
  TrainSample s;
  s.image = &image;
  for (const data::Annotation& a : record.annotations) {
    try {
      data::RoiSpec roi =
          data::make_roi(a.bbox, model_cfg.roi_expansion, image.width, image.height, jitter);
      data::TrainingTarget t = data::make_targets(a, roi, model_cfg.kind, model_cfg.order_classes);
      if (t.size() == 0) throw Error(ErrorCode::kTargetConstruction, "empty target");
      s.rois.push_back(roi);
      s.targets.push_back(std::move(t));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTargetConstruction && e.code() != ErrorCode::kDegenerateBox) {
        throw;
      }
      if (skipped != nullptr) ++*skipped;
    }
  }
  return s;
}

template <typename T>
LossTerms<T> batch_loss(const model::Model<T>& model, std::span<const TrainSample> batch,
                        const TrainConfig& cfg, int* buildings) {
  std::vector<Var<T>> reg, cls, ord;
  for (const TrainSample& s : batch) {
    if (s.rois.empty()) continue;
    const Var<T> feature = model.backbone(Var<T>(model::image_tensor<T>(*s.image)));
    for (std::size_t b = 0; b < s.rois.size(); ++b) {
      std::vector<model::PrimitiveOutput<T>> aux;
      model::ForwardOptions<T> opts;
      if (cfg.aux_loss) opts.aux_outputs = &aux;
      aux.push_back(model.forward_roi(feature, s.rois[b], opts));
      for (const auto& out : aux) {
        const LossTerms<T> l = building_loss(out, s.targets[b], cfg);
        reg.push_back(l.seg_reg);
        cls.push_back(l.seg_cls);
        ord.push_back(l.order);
      }
    }
  }
  const int count = static_cast<int>(reg.size());
  if (buildings != nullptr) *buildings = cfg.aux_loss ? count / model.config().decoder_blocks : count;
  if (count == 0) {
    const Var<T> zero(Tensor<T>({1}));
    return {zero, zero, zero, zero};
  }
  // Auxiliary terms count as extra buildings so the scale matches the
  // final-block loss times the number of blocks.
  const std::vector<T> w(static_cast<std::size_t>(count),
                         T(1) / static_cast<T>(cfg.aux_loss ? count / model.config().decoder_blocks
                                                            : count));
  return total_loss(nn::weighted_sum(reg, w), nn::weighted_sum(cls, w), nn::weighted_sum(ord, w),
                    cfg);
}

StepReport train_step(model::Model<float>& model, nn::AdamW<float>& optimizer,
                      std::span<const TrainSample> batch, const TrainConfig& cfg, double lr) {
  StepReport r;
  model.params().zero_grad();
  const LossTerms<float> loss = batch_loss(model, batch, cfg, &r.buildings);
  r.loss = report_of(loss);
  if (!std::isfinite(r.loss.total)) {
    std::ostringstream msg;
    msg << "non-finite loss (total " << r.loss.total << ", seg_reg " << r.loss.seg_reg
        << ", seg_cls " << r.loss.seg_cls << ", order " << r.loss.order << ", buildings "
        << r.buildings << ")";
    throw Error(ErrorCode::kNumeric, msg.str());
  }
  if (r.buildings == 0) return r;
  nn::backward(loss.total);
  r.grad_norm = optimizer.step(model.params(), lr);
  return r;
}

double learning_rate(const TrainConfig& cfg, int epoch) {
  return cfg.lr_decay_epoch > 0 && epoch >= cfg.lr_decay_epoch ? cfg.lr * 0.1 : cfg.lr;
}

Predictions predict_dataset(const model::Model<float>& model, const data::Dataset& dataset) {
  const std::int64_t n = static_cast<std::int64_t>(dataset.size());
  struct PerImage {
    std::vector<eval::InstancePrediction> instances;
    std::int64_t buildings = 0, rejected = 0;
    double error_sum = 0.0;
  };
  std::vector<PerImage> per(static_cast<std::size_t>(n));
  std::vector<std::string> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      const data::ImageRecord& rec = dataset.coco.images[static_cast<std::size_t>(i)];
      const data::Image image = dataset.load_image(static_cast<std::size_t>(i));
      std::vector<data::BBox> boxes;
      for (const auto& a : rec.annotations) boxes.push_back(a.bbox);
      const auto preds = model::infer_image(model, image, boxes);
      PerImage& p = per[static_cast<std::size_t>(i)];
      for (std::size_t b = 0; b < preds.size(); ++b) {
        ++p.buildings;
        const model::PolygonResult& poly = preds[b].polygon;
        if (!poly.accepted) {
          ++p.rejected;
          continue;
        }
        p.instances.push_back({-1, rec.id, poly.ring, poly.score});
        p.error_sum += matched_vertex_error(poly.ring, rec.annotations[b].ring);
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw Error(ErrorCode::kInput, "prediction failed: " + e);
  }
  Predictions out;
  double error_sum = 0.0;
  for (PerImage& p : per) {
    out.instances.insert(out.instances.end(), p.instances.begin(), p.instances.end());
    out.buildings += p.buildings;
    out.rejected += p.rejected;
    error_sum += p.error_sum;
  }
  const std::int64_t accepted = out.buildings - out.rejected;
  out.mean_vertex_error = accepted > 0 ? error_sum / static_cast<double>(accepted) : 0.0;
  return out;
}

model::Checkpoint training_checkpoint(const model::Model<float>& model,
                                      const nn::AdamW<float>& optimizer, int epoch,
                                      std::int64_t step, const FitOptions& options,
                                      const std::string& manifest_hash, const TrainConfig& cfg) {
  model::Checkpoint ckpt = model::model_checkpoint(model);
  ckpt.metadata["train_config"] = cfg;
  ckpt.metadata["run_config"] = options.run_config;
  ckpt.metadata["config_hash"] = options.config_hash;
  ckpt.metadata["manifest_hash"] = manifest_hash;
  ckpt.metadata["epoch"] = epoch;
  ckpt.metadata["step"] = step;
  ckpt.metadata["adam_steps"] = optimizer.steps();
  const auto& names = model.params().names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    ckpt.tensors.push_back({"adam_m/" + names[i], optimizer.first_moments()[i]});
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    ckpt.tensors.push_back({"adam_v/" + names[i], optimizer.second_moments()[i]});
  }
  return ckpt;
}

namespace {

std::string checkpoint_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ckpt_epoch%04d.p2p", epoch);
  return buf;
}

void restore(const model::Checkpoint& ckpt, model::Model<float>& model,
             nn::AdamW<float>& optimizer) {
  auto& store = model.params();
  const auto& names = store.names();
  auto load = [&](const std::string& name, const Tensor<float>& like) {
    const Tensor<float>& t = ckpt.tensor(name);
    if (t.shape() != like.shape()) {
      throw Error(ErrorCode::kResume, "tensor " + name + " has the wrong shape");
    }
    return t;
  };
  for (std::size_t i = 0; i < names.size(); ++i) {
    store.vars()[i].mutable_value() = load("param/" + names[i], store.vars()[i].value());
    optimizer.first_moments()[i] = load("adam_m/" + names[i], store.vars()[i].value());
    optimizer.second_moments()[i] = load("adam_v/" + names[i], store.vars()[i].value());
  }
  optimizer.set_steps(ckpt.metadata.at("adam_steps").get<std::int64_t>());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

FitResult fit(model::Model<float>& model, const data::Dataset& dataset, const TrainConfig& cfg,
              const FitOptions& options) {
  cfg.validate();
  if (dataset.size() == 0) throw Error(ErrorCode::kInput, "training dataset is empty");
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(options.out_dir);

  nn::AdamWConfig opt_cfg;
  opt_cfg.weight_decay = cfg.weight_decay;
  opt_cfg.clip_norm = cfg.clip_norm;
  nn::AdamW<float> optimizer(model.params(), opt_cfg);

  FitResult result;
  int start_epoch = 0;
  std::int64_t step = 0;
  if (options.resume) {
    const model::Checkpoint ckpt = model::read_checkpoint(*options.resume);
    const json& m = ckpt.metadata;
    if (!m.contains("config_hash") || m.at("config_hash") != options.config_hash) {
      throw Error(ErrorCode::kResume, "checkpoint config hash " +
                                          m.value("config_hash", std::string("<none>")) +
                                          " does not match " + options.config_hash);
    }
    if (m.value("manifest_hash", std::string()) != dataset.manifest_hash) {
      throw Error(ErrorCode::kResume, "checkpoint was trained on a different dataset manifest");
    }
    if (!m.contains("epoch") || !m.contains("step") || !m.contains("adam_steps")) {
      throw Error(ErrorCode::kResume, "checkpoint has no training position");
    }
    restore(ckpt, model, optimizer);
    start_epoch = m.at("epoch").get<int>();
    step = m.at("step").get<std::int64_t>();
    result.final_checkpoint = *options.resume;
  }

  auto save = [&](int epoch) {
    const auto path = options.out_dir / checkpoint_name(epoch);
    model::write_checkpoint(
        path, training_checkpoint(model, optimizer, epoch, step, options, dataset.manifest_hash, cfg));
    result.checkpoints.push_back(path);
    result.final_checkpoint = path;
  };
  if (!options.resume) save(0);
  result.epochs_completed = start_epoch;
  if (start_epoch >= cfg.epochs) {
    result.steps = step;
    return result;
  }

  std::ofstream log(options.out_dir / "train_log.jsonl",
                    options.resume ? std::ios::app : std::ios::trunc);
  const auto csv_path = options.out_dir / "metrics.csv";
  if (!options.resume || !std::filesystem::exists(csv_path)) {
    std::ofstream(csv_path, std::ios::trunc)
        << "epoch,step,mAP,AP50,AP75,AR@100,mean_vertex_error,rejected,buildings\n";
  }
  if (!log) throw Error(ErrorCode::kIo, "cannot write training log in " + options.out_dir.string());

  std::vector<data::Image> images;
  images.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) images.push_back(dataset.load_image(i));

  const auto seconds = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const std::size_t n = dataset.size();
  const std::size_t batches = (n + static_cast<std::size_t>(cfg.batch_size) - 1) /
                              static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 1, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const double lr = learning_rate(cfg, epoch);
    for (std::size_t b = 0; b < batches; ++b) {
      std::mt19937_64 jitter(derive_seed(cfg.seed, 2, static_cast<std::uint64_t>(epoch), b));
      std::vector<TrainSample> batch;
      int skipped = 0, truncated = 0;
      const std::size_t end = std::min(n, (b + 1) * static_cast<std::size_t>(cfg.batch_size));
      for (std::size_t k = b * static_cast<std::size_t>(cfg.batch_size); k < end; ++k) {
        const std::size_t idx = order[k];
        batch.push_back(make_sample(images[idx], dataset.coco.images[idx], model.config(),
                                    cfg.roi_jitter ? &jitter : nullptr, &skipped));
        for (const auto& t : batch.back().targets) {
          truncated += static_cast<int>(t.size()) > model.config().queries ? 1 : 0;
        }
      }
      if (truncated > 0) {
        std::fprintf(stderr, "warning: %d building(s) have more primitives than queries (%d); "
                     "extra targets are ignored\n", truncated, model.config().queries);
      }
      StepReport r;
      try {
        r = train_step(model, optimizer, batch, cfg, lr);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNumeric) throw;
        std::string ids;
        for (std::size_t k = b * static_cast<std::size_t>(cfg.batch_size); k < end; ++k) {
          ids += (ids.empty() ? "" : ",") + std::to_string(dataset.coco.images[order[k]].id);
        }
        throw Error(ErrorCode::kNumeric, std::string(e.what()) + " at epoch " +
                                             std::to_string(epoch) + " batch " +
                                             std::to_string(b) + " images [" + ids + "]");
      }
      if (r.buildings == 0) continue;
      ++step;
      json rec{{"step", step},
               {"epoch", epoch},
               {"lr", lr},
               {"loss", r.loss.total},
               {"seg_reg", r.loss.seg_reg},
               {"seg_cls", r.loss.seg_cls},
               {"order", r.loss.order},
               {"grad_norm", r.grad_norm},
               {"buildings", r.buildings},
               {"skipped", skipped},
               {"truncated", truncated},
               {"wall_time", seconds()}};
      log << rec.dump() << '\n';
      if (options.on_log) options.on_log(rec);
    }
    log.flush();
    const int completed = epoch + 1;
    result.epochs_completed = completed;
    if (options.validation != nullptr && cfg.eval_every > 0 &&
        (completed % cfg.eval_every == 0 || completed == cfg.epochs)) {
      const Predictions p = predict_dataset(model, *options.validation);
      const eval::MetricsReport m = eval::evaluate(p.instances, options.validation->coco);
      std::ofstream(csv_path, std::ios::app)
          << completed << ',' << step << ',' << fmt(m.map) << ',' << fmt(m.ap50) << ','
          << fmt(m.ap75) << ',' << fmt(m.ar) << ',' << fmt(p.mean_vertex_error) << ','
          << p.rejected << ',' << p.buildings << '\n';
      json rec{{"epoch", completed}, {"step", step},        {"mAP", m.map},
               {"AP50", m.ap50},     {"AP75", m.ap75},      {"AR@100", m.ar},
               {"mean_vertex_error", p.mean_vertex_error}, {"rejected", p.rejected},
               {"wall_time", seconds()}};
      log << rec.dump() << '\n';
      if (options.on_log) options.on_log(rec);
    }
    if (completed % cfg.checkpoint_every == 0 || completed == cfg.epochs) save(completed);
  }
  result.steps = step;
  return result;
}

template LossTerms<float> batch_loss(const model::Model<float>&, std::span<const TrainSample>,
                                     const TrainConfig&, int*);
template LossTerms<double> batch_loss(const model::Model<double>&, std::span<const TrainSample>,
                                      const TrainConfig&, int*);

}  // namespace p2p::train
