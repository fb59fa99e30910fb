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
#include <limits>

#include "p2p/common/error.hpp"
#include "p2p/train/train.hpp"

namespace p2p::train {

CostGrid matching_cost(const Tensor<double>& points, std::span<const double> foreground,
                       const data::TrainingTarget& target, double lambda1, double lambda2) {
  if (target.size() == 0) throw Error(ErrorCode::kInput, "matching needs at least one target");
  const int n = static_cast<int>(points.dim(0));
  const int width = static_cast<int>(points.dim(1));
  const int target_width = 2 * static_cast<int>(target.primitives[0].pts().size());
  if (width != target_width || static_cast<int>(foreground.size()) != n) {
    throw Error(ErrorCode::kShape, "matching cost: prediction width " + std::to_string(width) +
                                       " vs target width " + std::to_string(target_width));
  }
  CostGrid c{n, static_cast<int>(target.size()),
             std::vector<double>(static_cast<std::size_t>(n) * target.size())};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < c.cols; ++j) {
      const auto pts = target.primitives[static_cast<std::size_t>(j)].pts();
      double l1 = 0.0;
      for (std::size_t k = 0; k < pts.size(); ++k) {
        l1 += std::abs(points(i, 2 * static_cast<std::int64_t>(k)) - pts[k].x);
        l1 += std::abs(points(i, 2 * static_cast<std::int64_t>(k) + 1) - pts[k].y);
      }
      c(i, j) = lambda1 * l1 - lambda2 * foreground[static_cast<std::size_t>(i)];
    }
  }
  return c;
}

int MatchResult::matched_count() const {
  int n = 0;
  for (int s : sigma) n += s < targets ? 1 : 0;
  return n;
}

MatchResult hungarian(const CostGrid& cost) {
  for (double v : cost.values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNumeric, "non-finite matching cost");
  }
  const int n_pred = cost.rows;
  const int n_tgt = std::min(cost.cols, cost.rows);
  MatchResult r;
  r.targets = n_tgt;
  r.truncated = cost.cols > cost.rows;

  // Shortest augmenting paths with potentials; rows are targets, columns predictions.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n_tgt + 1, 0.0), v(n_pred + 1, 0.0);
  std::vector<int> p(n_pred + 1, 0), way(n_pred + 1, 0);
  for (int i = 1; i <= n_tgt; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n_pred + 1, inf);
    std::vector<char> used(n_pred + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n_pred; ++j) {
        if (used[j]) continue;
        const double cur = cost(j - 1, i0 - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n_pred; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  r.sigma.assign(static_cast<std::size_t>(n_pred), -1);
  for (int j = 1; j <= n_pred; ++j) {
    if (p[j] > 0) r.sigma[static_cast<std::size_t>(j - 1)] = p[j] - 1;
  }
  int next = n_tgt;
  for (int& s : r.sigma) {
    if (s < 0) s = next++;
  }
  return r;
}

double matched_vertex_error(const geom::PolygonRing& predicted, const geom::PolygonRing& truth) {
  const auto& a = predicted.vertices();
  const auto& b = truth.vertices();
  const bool flip = a.size() < b.size();
  const auto& rows = flip ? b : a;
  const auto& cols = flip ? a : b;
  CostGrid c{static_cast<int>(rows.size()), static_cast<int>(cols.size()),
             std::vector<double>(rows.size() * cols.size())};
  for (int i = 0; i < c.rows; ++i) {
    for (int j = 0; j < c.cols; ++j) c(i, j) = geom::distance(rows[i], cols[j]);
  }
  const MatchResult m = hungarian(c);
  double sum = 0.0;
  for (int i = 0; i < c.rows; ++i) {
    if (m.matched(i)) sum += c(i, m.sigma[static_cast<std::size_t>(i)]);
  }
  return sum / static_cast<double>(c.cols);
}

}  // namespace p2p::train
