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
#include <string>

#include "p2p/common/error.hpp"
#include "p2p/train/train.hpp"

namespace p2p::train {

namespace {

template <typename T>
double scalar(const Var<T>& v) {
  return static_cast<double>(v.value()[0]);
}

}  // namespace

template <typename T>
LossReport report_of(const LossTerms<T>& terms) {
  return {scalar(terms.total), scalar(terms.seg_reg), scalar(terms.seg_cls), scalar(terms.order)};
}

template <typename T>
std::pair<Var<T>, Var<T>> seg_loss(const model::PrimitiveOutput<T>& out,
                                   const data::TrainingTarget& target, const MatchResult& match) {
  const std::int64_t n = out.points.dim(0), width = out.points.dim(1);
  if (static_cast<std::int64_t>(match.sigma.size()) != n) {
    throw Error(ErrorCode::kShape, "match size does not match predictions");
  }
  Tensor<T> goal({n, width});
  std::vector<T> reg_w(static_cast<std::size_t>(n), T(0));
  std::vector<T> cls_w(static_cast<std::size_t>(n), T(1) / static_cast<T>(n));
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (std::int64_t i = 0; i < n; ++i) {
    if (!match.matched(static_cast<int>(i))) continue;
    const auto pts = target.primitives[static_cast<std::size_t>(match.sigma[i])].pts();
    if (static_cast<std::int64_t>(2 * pts.size()) != width) {
      throw Error(ErrorCode::kShape, "target width does not match predictions");
    }
    for (std::size_t k = 0; k < pts.size(); ++k) {
      goal(i, 2 * static_cast<std::int64_t>(k)) = static_cast<T>(pts[k].x);
      goal(i, 2 * static_cast<std::int64_t>(k) + 1) = static_cast<T>(pts[k].y);
    }
    reg_w[static_cast<std::size_t>(i)] = T(1) / static_cast<T>(n);
    labels[static_cast<std::size_t>(i)] = 1;
  }
  return {nn::weighted_l1(out.points, goal, std::span<const T>(reg_w)),
          nn::softmax_cross_entropy(out.scores, std::span<const int>(labels),
                                    std::span<const T>(cls_w))};
}

template <typename T>
Var<T> order_loss(const Var<T>& order_logits, const data::TrainingTarget& target,
                  const MatchResult& match) {
  const std::int64_t n = order_logits.dim(0), classes = order_logits.dim(1);
  const int matched = match.matched_count();
  if (matched == 0) return Var<T>(Tensor<T>({1}));
  std::vector<T> weights(static_cast<std::size_t>(n), T(0));
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (std::int64_t i = 0; i < n; ++i) {
    if (!match.matched(static_cast<int>(i))) continue;
    const int label = target.orders[static_cast<std::size_t>(match.sigma[i])];
    if (label < 0 || label >= classes) {
      throw Error(ErrorCode::kLabel, "order label " + std::to_string(label) + " outside [0, " +
                                         std::to_string(classes) + ")");
    }
    labels[static_cast<std::size_t>(i)] = label;
    weights[static_cast<std::size_t>(i)] = T(1) / static_cast<T>(matched);
  }
  return nn::softmax_cross_entropy(order_logits, std::span<const int>(labels),
                                   std::span<const T>(weights));
}

template <typename T>
LossTerms<T> total_loss(const Var<T>& seg_reg, const Var<T>& seg_cls, const Var<T>& order,
                        const TrainConfig& cfg) {
  const std::vector<Var<T>> terms{seg_reg, seg_cls, order};
  const std::vector<T> coeffs{static_cast<T>(cfg.alpha * cfg.lambda1),
                              static_cast<T>(cfg.alpha * cfg.lambda2), static_cast<T>(cfg.beta)};
  return {nn::weighted_sum(terms, coeffs), seg_reg, seg_cls, order};
}

template <typename T>
LossTerms<T> building_loss(const model::PrimitiveOutput<T>& out,
                           const data::TrainingTarget& target, const TrainConfig& cfg,
                           MatchResult* match) {
  const std::int64_t n = out.points.dim(0);
  std::vector<double> fg(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const double bg_logit = out.scores.value()(i, 0), fg_logit = out.scores.value()(i, 1);
    fg[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(bg_logit - fg_logit));
  }
  const MatchResult m =
      hungarian(matching_cost(out.points.value().template cast<double>(), fg, target,
                              cfg.lambda1, cfg.lambda2));
  auto [reg, cls] = seg_loss(out, target, m);
  const Var<T> ord = order_loss(out.orders, target, m);
  if (match != nullptr) *match = m;
  return total_loss(reg, cls, ord, cfg);
}

#define P2P_INSTANTIATE(T)                                                                    \
  template LossReport report_of(const LossTerms<T>&);                                         \
  template std::pair<Var<T>, Var<T>> seg_loss(const model::PrimitiveOutput<T>&,              \
                                              const data::TrainingTarget&, const MatchResult&); \
  template Var<T> order_loss(const Var<T>&, const data::TrainingTarget&, const MatchResult&);  \
  template LossTerms<T> total_loss(const Var<T>&, const Var<T>&, const Var<T>&,              \
                                   const TrainConfig&);                                      \
  template LossTerms<T> building_loss(const model::PrimitiveOutput<T>&,                      \
                                      const data::TrainingTarget&, const TrainConfig&,       \
                                      MatchResult*);
P2P_INSTANTIATE(float)
P2P_INSTANTIATE(double)
#undef P2P_INSTANTIATE

}  // namespace p2p::train
