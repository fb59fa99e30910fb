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

// Backbone, ROI feature extraction, multi-scale decoder inputs, group-query
// primitive decoder, primitive predictor and order decoder.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "p2p/data/data.hpp"
#include "p2p/geom/geom.hpp"
#include "p2p/nn/layers.hpp"

namespace p2p::model {

using nn::Tensor;
using nn::Var;

// How primitives are represented by queries.
enum class QueryMode {
  kGroupQueries,          // n queries per primitive, one shared position embedding
  kGroupQueriesGroupPos,  // n queries and n position embeddings per primitive
  kSharedQueryGroupPos,   // one query repeated n times, n position embeddings
  kSingleQuery,           // one query and one position embedding per primitive
};

std::string_view to_string(QueryMode mode);
QueryMode query_mode_from_string(std::string_view name);

struct ModelConfig {
  geom::PrimitiveKind kind = geom::PrimitiveKind::kCorner;
  int channels = 64;
  int queries = 30;
  int roi_size = 32;
  int scales = 3;
  int decoder_blocks = 3;
  int order_classes = 36;
  int order_layers = 3;
  int heads = 4;
  double score_threshold = 0.5;
  double roi_expansion = 1.1;

  QueryMode query_mode = QueryMode::kGroupQueries;
  bool update_pos = true;
  bool predict_with_pos = true;
  bool multi_scale = true;
  bool key_pos_encoding = true;
  bool query_ffn = true;  // feed-forward sublayer on Q inside each decoder block

  int points() const { return geom::points_per_primitive(kind); }
  // Query rows per primitive (1 for kSingleQuery).
  int rows_per_primitive() const {
    return query_mode == QueryMode::kSingleQuery ? 1 : points();
  }
  void validate() const;
};

template <typename T>
struct QueryState {
  Var<T> q;      // (N * rows) x C
  Var<T> q_pos;  // (N * rows) x C
};

template <typename T>
struct PrimitiveOutput {
  Var<T> points;   // N x 2n, ROI-normalised coordinates in [0, 1]
  Var<T> q_prim;   // N x C
  Var<T> scores;   // N x 2 logits (background, foreground)
  Var<T> orders;   // N x N_order logits
};

template <typename T>
struct ForwardOptions {
  // Receives the heads-averaged cross-attention weights of the last decoder
  // block, (N * rows) x tokens.
  Tensor<float>* final_attention = nullptr;
  // Receives the position embeddings entering and leaving every block.
  std::vector<Tensor<double>>* pos_trace = nullptr;
  // Receives predictions from every block but the last (shared heads).
  std::vector<PrimitiveOutput<T>>* aux_outputs = nullptr;
};

template <typename T>
class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterStore<T>& params() { return params_; }
  const nn::ParameterStore<T>& params() const { return params_; }

  // image: H x W x 1 with H, W divisible by 4. Returns H/4 x W/4 x C.
  Var<T> backbone(const Var<T>& image) const;
  // S x S x C crop of a stride-4 feature map for a pixel-space ROI.
  Var<T> roi_extract(const Var<T>& feature, const data::RoiSpec& roi) const;
  // Token matrices in block order (smallest scale first).
  std::vector<Var<T>> decoder_inputs(const Var<T>& instance) const;
  // Positional encodings for a tokens matrix with `tokens` rows.
  const Tensor<T>& positional_encoding(std::int64_t tokens) const;
  QueryState<T> init_queries() const;
  QueryState<T> decoder_block(int block, const QueryState<T>& state, const Var<T>& tokens,
                              Tensor<T>* attention = nullptr) const;
  // Points, fused queries and scores; orders left undefined.
  PrimitiveOutput<T> primitive_predictor(const QueryState<T>& state) const;
  Var<T> order_decoder(const Var<T>& q_prim) const;

  PrimitiveOutput<T> forward_roi(const Var<T>& feature, const data::RoiSpec& roi,
                                 const ForwardOptions<T>& options = {}) const;
  std::vector<PrimitiveOutput<T>> forward(const data::Image& image,
                                          const std::vector<data::RoiSpec>& rois) const;

  // Mutable handle to the final layer of the position-offset FFN of a block.
  nn::Linear<T>& pos_offset_output(int block) { return blocks_.at(block).pos_ffn.fc2; }
  nn::Conv2d<T>& backbone_output() { return out_conv_; }

 private:
  struct Block {
    nn::LayerNorm<T> ca_norm, sa_norm, ffn_norm;
    nn::MultiHeadAttention<T> cross, self;
    nn::FeedForward<T> ffn, pos_ffn;
  };
  struct OrderLayer {
    nn::LayerNorm<T> sa_norm, ffn_norm;
    nn::MultiHeadAttention<T> self;
    nn::FeedForward<T> ffn;
  };

  ModelConfig cfg_;
  nn::ParameterStore<T> params_;
  nn::Conv2d<T> stem_, c2_, c3_, c3b_, out_conv_;
  std::vector<nn::Conv2d<T>> down_;
  Var<T> query_, query_pos_;
  std::vector<Block> blocks_;
  nn::LayerNorm<T> out_norm_;
  nn::Linear<T> mlp1_, mlp2_, mlp3_, fuse_, score_;
  std::vector<OrderLayer> order_layers_;
  nn::LayerNorm<T> order_norm_;
  nn::Linear<T> order_head_;
  std::vector<Tensor<T>> pos_cache_;  // by scale
};

Tensor<double> sine_positional_encoding(int height, int width, int channels);

// Converts an intensity image to the backbone's H x W x 1 input.
template <typename T>
Tensor<T> image_tensor(const data::Image& image);

// Decoded prediction for one ROI in plain numbers.
struct DecodedPrimitives {
  std::vector<geom::Primitive> primitives;  // pixel coordinates
  std::vector<double> foreground;           // probability per primitive
  std::vector<int> orders;                  // argmax order class per primitive
};

template <typename T>
DecodedPrimitives decode(const PrimitiveOutput<T>& out, const data::RoiSpec& roi,
                         const ModelConfig& cfg);

struct PolygonResult {
  bool accepted = false;
  geom::PolygonRing ring;
  double score = 0.0;              // mean foreground probability of survivors
  std::vector<int> orders;         // orders of survivors in assembly order
  std::vector<std::size_t> kept;   // indices of survivors
};

// Keeps primitives with foreground probability >= threshold and assembles
// them. Fewer than three survivors (or a degenerate result) is a rejection.
PolygonResult infer_polygon(const DecodedPrimitives& decoded, const ModelConfig& cfg);

}  // namespace p2p::model
