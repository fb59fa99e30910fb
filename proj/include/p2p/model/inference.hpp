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

// Box-conditioned polygon inference for whole images.

#include <span>
#include <vector>

#include "p2p/model/model.hpp"

namespace p2p::model {

struct BuildingPrediction {
  data::RoiSpec roi;
  DecodedPrimitives decoded;
  PolygonResult polygon;
};

// One prediction per box, in box order. Runs without recording gradients.
std::vector<BuildingPrediction> infer_image(const Model<float>& model, const data::Image& image,
                                            std::span<const data::BBox> boxes);

}  // namespace p2p::model
