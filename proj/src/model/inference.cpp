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
#include "p2p/model/inference.hpp"

namespace p2p::model {

std::vector<BuildingPrediction> infer_image(const Model<float>& model, const data::Image& image,
                                            std::span<const data::BBox> boxes) {
  std::vector<BuildingPrediction> out;
  if (boxes.empty()) return out;
  nn::NoGradGuard guard;
  const ModelConfig& cfg = model.config();
  std::vector<data::RoiSpec> rois;
  for (const data::BBox& b : boxes) {
    rois.push_back(data::make_roi(b, cfg.roi_expansion, image.width, image.height, nullptr));
  }
  const std::vector<PrimitiveOutput<float>> outs = model.forward(image, rois);
  for (std::size_t i = 0; i < outs.size(); ++i) {
    BuildingPrediction p;
    p.roi = rois[i];
    p.decoded = decode(outs[i], rois[i], cfg);
    p.polygon = infer_polygon(p.decoded, cfg);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace p2p::model
