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
#include "p2p/model/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "p2p/common/error.hpp"
#include "p2p/common/hash.hpp"

namespace p2p::model {

using nn::FeatureBox;

namespace {

constexpr double kFeatureStride = 4.0;

template <typename T>
Var<T> constant(const Tensor<T>& t) {
  return Var<T>(t);
}

}  // namespace

std::string_view to_string(QueryMode mode) {
  switch (mode) {
    case QueryMode::kGroupQueries: return "group_queries";
    case QueryMode::kGroupQueriesGroupPos: return "group_queries_group_pos";
    case QueryMode::kSharedQueryGroupPos: return "shared_query_group_pos";
    case QueryMode::kSingleQuery: return "single_query";
  }
  return "?";
}

QueryMode query_mode_from_string(std::string_view name) {
  for (QueryMode m : {QueryMode::kGroupQueries, QueryMode::kGroupQueriesGroupPos,
                      QueryMode::kSharedQueryGroupPos, QueryMode::kSingleQuery}) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorCode::kInput, "unknown query mode '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kShape, "model config: " + m); };
  if (channels <= 0 || heads <= 0 || channels % heads != 0) fail("channels must divide by heads");
  if (channels % 4 != 0) fail("channels must be a multiple of 4");
  if (queries < 1) fail("need at least one query");
  if (scales < 1) fail("need at least one scale");
  if (roi_size <= 0 || roi_size % (1 << scales) != 0) {
    fail("roi_size " + std::to_string(roi_size) + " not divisible by 2^" + std::to_string(scales));
  }
  if (decoder_blocks < 1) fail("need at least one decoder block");
  if (order_classes < 3) fail("need at least three order classes");
  if (order_layers < 0) fail("negative order layer count");
  if (score_threshold < 0.0 || score_threshold > 1.0) fail("score threshold outside [0, 1]");
  if (roi_expansion < 1.0) fail("roi expansion below 1");
}

Tensor<double> sine_positional_encoding(int height, int width, int channels) {
  const int half = channels / 2;
  Tensor<double> pe({static_cast<std::int64_t>(height) * width, channels});
  const double two_pi = 2.0 * std::acos(-1.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double coords[2] = {(y + 0.5) / height * two_pi, (x + 0.5) / width * two_pi};
      for (int axis = 0; axis < 2; ++axis) {
        for (int k = 0; k < half; ++k) {
          const double freq = std::pow(10000.0, 2.0 * (k / 2) / half);
          const double a = coords[axis] / freq;
          pe(static_cast<std::int64_t>(y) * width + x, axis * half + k) =
              k % 2 == 0 ? std::sin(a) : std::cos(a);
        }
      }
    }
  }
  return pe;
}

template <typename T>
Tensor<T> image_tensor(const data::Image& image) {
  Tensor<T> t({image.height, image.width, 1});
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    t[static_cast<std::int64_t>(i)] = static_cast<T>(2.0f * image.pixels[i] - 1.0f);
  }
  return t;
}

template <typename T>
Model<T>::Model(const ModelConfig& config, std::uint64_t seed) : cfg_(config) {
  cfg_.validate();
  nn::Rng rng(derive_seed(seed, 0x6d6f64656cULL));
  const std::int64_t c = cfg_.channels;
  auto& ps = params_;
  stem_ = nn::Conv2d<T>(ps, "backbone.stem", 1, c / 2, 3, 2, rng);
  c2_ = nn::Conv2d<T>(ps, "backbone.c2", c / 2, c, 3, 2, rng);
  c3_ = nn::Conv2d<T>(ps, "backbone.c3", c, c, 3, 2, rng);
  c3b_ = nn::Conv2d<T>(ps, "backbone.c3b", c, c, 3, 1, rng);
  out_conv_ = nn::Conv2d<T>(ps, "backbone.out", c, c, 3, 1, rng);
  if (cfg_.multi_scale) {
    for (int i = 0; i + 1 < cfg_.scales; ++i) {
      down_.emplace_back(ps, "decoder_input.down" + std::to_string(i), c, c, 3, 2, rng);
    }
  }

  const std::int64_t n = cfg_.queries, rows = cfg_.rows_per_primitive();
  const bool shared_query = cfg_.query_mode == QueryMode::kSharedQueryGroupPos;
  const bool group_pos = cfg_.query_mode == QueryMode::kGroupQueriesGroupPos ||
                         cfg_.query_mode == QueryMode::kSharedQueryGroupPos;
  query_ = ps.create("queries.q",
                     nn::normal_tensor<T>({shared_query ? n : n * rows, c}, 0.02, rng));
  query_pos_ =
      ps.create("queries.pos", nn::normal_tensor<T>({group_pos ? n * rows : n, c}, 1.0, rng));

  for (int l = 0; l < cfg_.decoder_blocks; ++l) {
    const std::string p = "decoder." + std::to_string(l);
    Block b;
    b.ca_norm = nn::LayerNorm<T>(ps, p + ".ca_norm", c);
    b.cross = nn::MultiHeadAttention<T>(ps, p + ".cross", c, cfg_.heads, rng);
    b.sa_norm = nn::LayerNorm<T>(ps, p + ".sa_norm", c);
    b.self = nn::MultiHeadAttention<T>(ps, p + ".self", c, cfg_.heads, rng);
    if (cfg_.query_ffn) {
      b.ffn_norm = nn::LayerNorm<T>(ps, p + ".ffn_norm", c);
      b.ffn = nn::FeedForward<T>(ps, p + ".ffn", c, 2 * c, c, rng);
    }
    if (cfg_.update_pos) b.pos_ffn = nn::FeedForward<T>(ps, p + ".pos_ffn", c, 2 * c, c, rng);
    blocks_.push_back(std::move(b));
  }
  out_norm_ = nn::LayerNorm<T>(ps, "decoder.out_norm", c);

  const std::int64_t mlp_in = cfg_.predict_with_pos ? 2 * c : c;
  const std::int64_t coords = cfg_.query_mode == QueryMode::kSingleQuery ? 2 * cfg_.points() : 2;
  mlp1_ = nn::Linear<T>(ps, "predictor.mlp1", mlp_in, 2 * c, rng);
  mlp2_ = nn::Linear<T>(ps, "predictor.mlp2", 2 * c, 2 * c, rng);
  mlp3_ = nn::Linear<T>(ps, "predictor.mlp3", 2 * c, coords, rng);
  fuse_ = nn::Linear<T>(ps, "predictor.fuse", rows * c, c, rng);
  score_ = nn::Linear<T>(ps, "predictor.score", c, 2, rng);

  for (int l = 0; l < cfg_.order_layers; ++l) {
    const std::string p = "order." + std::to_string(l);
    OrderLayer o;
    o.sa_norm = nn::LayerNorm<T>(ps, p + ".sa_norm", c);
    o.self = nn::MultiHeadAttention<T>(ps, p + ".self", c, cfg_.heads, rng);
    o.ffn_norm = nn::LayerNorm<T>(ps, p + ".ffn_norm", c);
    o.ffn = nn::FeedForward<T>(ps, p + ".ffn", c, 2 * c, c, rng);
    order_layers_.push_back(std::move(o));
  }
  if (cfg_.order_layers > 0) order_norm_ = nn::LayerNorm<T>(ps, "order.norm", c);
  order_head_ = nn::Linear<T>(ps, "order.head", c, cfg_.order_classes, rng);

  for (int s = 0; s < cfg_.scales; ++s) {
    const int side = cfg_.roi_size >> s;
    pos_cache_.push_back(
        sine_positional_encoding(side, side, cfg_.channels).template cast<T>());
  }
}

template <typename T>
Var<T> Model<T>::backbone(const Var<T>& image) const {
  if (image.value().rank() != 3 || image.dim(2) != 1) {
    throw Error(ErrorCode::kShape, "backbone expects an H x W x 1 image, got " +
                                       nn::shape_string(image.shape()));
  }
  const std::int64_t h = image.dim(0), w = image.dim(1);
  if (h % 4 != 0 || w % 4 != 0) {
    throw Error(ErrorCode::kShape, "image size " + std::to_string(h) + "x" + std::to_string(w) +
                                       " is not divisible by 4");
  }
  Var<T> x = nn::relu(stem_(image));
  Var<T> c2 = nn::relu(c2_(x));
  Var<T> c3 = nn::relu(c3b_(nn::relu(c3_(c2))));
  Var<T> fused = nn::add(c2, nn::upsample2x(c3, c2.dim(0), c2.dim(1)));
  return out_conv_(fused);
}

template <typename T>
Var<T> Model<T>::roi_extract(const Var<T>& feature, const data::RoiSpec& roi) const {
  const double fh = static_cast<double>(feature.dim(0)), fw = static_cast<double>(feature.dim(1));
  const FeatureBox box{roi.box.x0 / kFeatureStride - 0.5, roi.box.y0 / kFeatureStride - 0.5,
                       roi.box.x1 / kFeatureStride - 0.5, roi.box.y1 / kFeatureStride - 0.5};
  if (!(box.x1 > box.x0) || !(box.y1 > box.y0) || box.x1 < -0.5 || box.y1 < -0.5 ||
      box.x0 > fw - 0.5 || box.y0 > fh - 0.5) {
    throw Error(ErrorCode::kDegenerateBox, "ROI does not intersect the feature map");
  }
  return nn::roi_align(feature, box, cfg_.roi_size);
}

template <typename T>
std::vector<Var<T>> Model<T>::decoder_inputs(const Var<T>& instance) const {
  const std::int64_t c = cfg_.channels;
  if (instance.value().rank() != 3 || instance.dim(0) != cfg_.roi_size ||
      instance.dim(1) != cfg_.roi_size || instance.dim(2) != c) {
    throw Error(ErrorCode::kShape, "instance feature " + nn::shape_string(instance.shape()) +
                                       " does not match roi_size/channels");
  }
  std::vector<Var<T>> maps{instance};
  if (cfg_.multi_scale) {
    for (const nn::Conv2d<T>& down : down_) maps.push_back(nn::relu(down(maps.back())));
    std::reverse(maps.begin(), maps.end());
  } else {
    maps.assign(static_cast<std::size_t>(cfg_.scales), instance);
  }
  std::vector<Var<T>> tokens;
  for (const Var<T>& m : maps) tokens.push_back(nn::reshape(m, {m.dim(0) * m.dim(1), c}));
  return tokens;
}

template <typename T>
const Tensor<T>& Model<T>::positional_encoding(std::int64_t tokens) const {
  for (const Tensor<T>& pe : pos_cache_) {
    if (pe.dim(0) == tokens) return pe;
  }
  throw Error(ErrorCode::kShape, "no positional encoding for " + std::to_string(tokens) + " tokens");
}

template <typename T>
QueryState<T> Model<T>::init_queries() const {
  const std::int64_t rows = cfg_.rows_per_primitive();
  QueryState<T> s;
  s.q = cfg_.query_mode == QueryMode::kSharedQueryGroupPos ? nn::repeat_rows(query_, rows)
                                                            : query_;
  const bool group_pos = cfg_.query_mode == QueryMode::kGroupQueriesGroupPos ||
                         cfg_.query_mode == QueryMode::kSharedQueryGroupPos;
  s.q_pos = group_pos ? query_pos_ : nn::repeat_rows(query_pos_, rows);
  return s;
}

template <typename T>
QueryState<T> Model<T>::decoder_block(int block, const QueryState<T>& state, const Var<T>& tokens,
                                      Tensor<T>* attention) const {
  const Block& b = blocks_.at(static_cast<std::size_t>(block));
  if (tokens.value().rank() != 2 || tokens.dim(1) != cfg_.channels ||
      state.q.dim(1) != cfg_.channels) {
    throw Error(ErrorCode::kShape, "decoder block width mismatch: tokens " +
                                       nn::shape_string(tokens.shape()) + ", queries " +
                                       nn::shape_string(state.q.shape()));
  }
  const Var<T> keys = cfg_.key_pos_encoding
                          ? nn::add(tokens, constant(positional_encoding(tokens.dim(0))))
                          : tokens;
  Var<T> q = state.q;
  q = nn::add(q, b.cross(nn::add(b.ca_norm(q), state.q_pos), keys, tokens, attention));
  const Var<T> qs = b.sa_norm(q);
  const Var<T> qk = nn::add(qs, state.q_pos);
  q = nn::add(q, b.self(qk, qk, qs));
  if (cfg_.query_ffn) q = nn::add(q, b.ffn(b.ffn_norm(q)));
  QueryState<T> out;
  out.q = q;
  out.q_pos = cfg_.update_pos ? nn::add(b.pos_ffn(q), state.q_pos) : state.q_pos;
  return out;
}

template <typename T>
PrimitiveOutput<T> Model<T>::primitive_predictor(const QueryState<T>& state) const {
  const std::int64_t n = cfg_.queries, rows = cfg_.rows_per_primitive();
  const std::int64_t c = cfg_.channels;
  const Var<T> qn = out_norm_(state.q);
  const Var<T> in = cfg_.predict_with_pos ? nn::concat_cols(qn, state.q_pos) : qn;
  const Var<T> h = nn::relu(mlp2_(nn::relu(mlp1_(in))));
  PrimitiveOutput<T> out;
  out.points = nn::reshape(nn::sigmoid(mlp3_(h)), {n, 2 * cfg_.points()});
  out.q_prim = fuse_(nn::reshape(qn, {n, rows * c}));
  out.scores = score_(out.q_prim);
  return out;
}

template <typename T>
Var<T> Model<T>::order_decoder(const Var<T>& q_prim) const {
  Var<T> x = q_prim;
  for (const OrderLayer& o : order_layers_) {
    const Var<T> xn = o.sa_norm(x);
    x = nn::add(x, o.self(xn, xn, xn));
    x = nn::add(x, o.ffn(o.ffn_norm(x)));
  }
  if (!order_layers_.empty()) x = order_norm_(x);
  return order_head_(x);
}

template <typename T>
PrimitiveOutput<T> Model<T>::forward_roi(const Var<T>& feature, const data::RoiSpec& roi,
                                         const ForwardOptions<T>& options) const {
  const std::vector<Var<T>> tokens = decoder_inputs(roi_extract(feature, roi));
  QueryState<T> state = init_queries();
  for (int l = 0; l < cfg_.decoder_blocks; ++l) {
    const bool last = l + 1 == cfg_.decoder_blocks;
    Tensor<T> probs;
    const Var<T>& input = tokens[std::min<std::size_t>(l, tokens.size() - 1)];
    if (options.pos_trace != nullptr) {
      options.pos_trace->push_back(state.q_pos.value().template cast<double>());
    }
    state = decoder_block(l, state, input,
                          last && options.final_attention != nullptr ? &probs : nullptr);
    if (last && options.final_attention != nullptr) {
      const std::int64_t heads = probs.dim(0), rows = probs.dim(1), nk = probs.dim(2);
      Tensor<float> avg({rows, nk});
      for (std::int64_t h = 0; h < heads; ++h) {
        for (std::int64_t i = 0; i < rows * nk; ++i) {
          avg[i] += static_cast<float>(probs[h * rows * nk + i]) / static_cast<float>(heads);
        }
      }
      *options.final_attention = std::move(avg);
    }
    if (!last && options.aux_outputs != nullptr) {
      PrimitiveOutput<T> aux = primitive_predictor(state);
      aux.orders = order_decoder(aux.q_prim);
      options.aux_outputs->push_back(std::move(aux));
    }
  }
  if (options.pos_trace != nullptr) {
    options.pos_trace->push_back(state.q_pos.value().template cast<double>());
  }
  PrimitiveOutput<T> out = primitive_predictor(state);
  out.orders = order_decoder(out.q_prim);
  return out;
}

template <typename T>
std::vector<PrimitiveOutput<T>> Model<T>::forward(const data::Image& image,
                                                  const std::vector<data::RoiSpec>& rois) const {
  if (rois.empty()) throw Error(ErrorCode::kInput, "forward needs at least one ROI");
  const Var<T> feature = backbone(Var<T>(image_tensor<T>(image)));
  std::vector<PrimitiveOutput<T>> outs;
  for (const data::RoiSpec& roi : rois) outs.push_back(forward_roi(feature, roi));
  return outs;
}

template <typename T>
DecodedPrimitives decode(const PrimitiveOutput<T>& out, const data::RoiSpec& roi,
                         const ModelConfig& cfg) {
  const std::int64_t n = out.points.dim(0), np = cfg.points();
  const std::int64_t classes = out.orders.dim(1);
  DecodedPrimitives d;
  for (std::int64_t i = 0; i < n; ++i) {
    std::array<geom::Point2, 3> pts{};
    for (std::int64_t k = 0; k < np; ++k) {
      pts[k] = data::from_roi(roi, {static_cast<double>(out.points.value()(i, 2 * k)),
                                    static_cast<double>(out.points.value()(i, 2 * k + 1))});
    }
    d.primitives.push_back(
        geom::make_primitive(cfg.kind, {pts.data(), static_cast<std::size_t>(np)}));
    const double bg = out.scores.value()(i, 0), fg = out.scores.value()(i, 1);
    d.foreground.push_back(1.0 / (1.0 + std::exp(bg - fg)));
    const T* row = out.orders.value().data() + i * classes;
    d.orders.push_back(static_cast<int>(std::max_element(row, row + classes) - row));
  }
  return d;
}

PolygonResult infer_polygon(const DecodedPrimitives& decoded, const ModelConfig& cfg) {
  PolygonResult r;
  geom::OrderedPrimitiveSet set;
  for (std::size_t i = 0; i < decoded.primitives.size(); ++i) {
    if (decoded.foreground[i] < cfg.score_threshold) continue;
    r.kept.push_back(i);
    set.primitives.push_back(decoded.primitives[i]);
    set.orders.push_back(decoded.orders[i]);
    set.confidences.push_back(decoded.foreground[i]);
  }
  if (r.kept.size() < 3) return r;
  try {
    r.ring = geom::assemble_polygon(set, cfg.kind);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateRing && e.code() != ErrorCode::kInsufficientPrimitives) {
      throw;
    }
    return r;
  }
  r.accepted = true;
  r.score = std::accumulate(set.confidences.begin(), set.confidences.end(), 0.0) /
            static_cast<double>(set.confidences.size());
  std::vector<std::size_t> idx(r.kept.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (set.orders[a] != set.orders[b]) return set.orders[a] < set.orders[b];
    return set.confidences[a] > set.confidences[b];
  });
  for (std::size_t i : idx) r.orders.push_back(set.orders[i]);
  return r;
}

template Tensor<float> image_tensor<float>(const data::Image&);
template Tensor<double> image_tensor<double>(const data::Image&);
template class Model<float>;
template class Model<double>;
template DecodedPrimitives decode<float>(const PrimitiveOutput<float>&, const data::RoiSpec&,
                                         const ModelConfig&);
template DecodedPrimitives decode<double>(const PrimitiveOutput<double>&, const data::RoiSpec&,
                                          const ModelConfig&);

}  // namespace p2p::model
