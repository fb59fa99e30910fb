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
#include "p2p/model/json.hpp"

#include "p2p/common/error.hpp"

namespace p2p::model {

using nlohmann::json;

#define P2P_MODEL_FIELDS(X)                                                              \
  X(channels) X(queries) X(roi_size) X(scales) X(decoder_blocks) X(order_classes)        \
  X(order_layers) X(heads) X(score_threshold) X(roi_expansion) X(update_pos)             \
  X(predict_with_pos) X(multi_scale) X(key_pos_encoding) X(query_ffn)

void to_json(json& j, const ModelConfig& c) {
  j = json::object();
  j["kind"] = std::string(geom::to_string(c.kind));
  j["query_mode"] = std::string(to_string(c.query_mode));
#define P2P_PUT(name) j[#name] = c.name;
  P2P_MODEL_FIELDS(P2P_PUT)
#undef P2P_PUT
}

void from_json(const json& j, ModelConfig& c) {
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") {
      c.kind = geom::primitive_kind_from_string(value.get<std::string>());
      continue;
    }
    if (key == "query_mode") {
      c.query_mode = query_mode_from_string(value.get<std::string>());
      continue;
    }
#define P2P_GET(name)     \
  if (key == #name) {     \
    value.get_to(c.name); \
    continue;             \
  }
    P2P_MODEL_FIELDS(P2P_GET)
#undef P2P_GET
    throw Error(ErrorCode::kInput, "unknown model config key '" + key + "'");
  }
}

#undef P2P_MODEL_FIELDS

}  // namespace p2p::model
