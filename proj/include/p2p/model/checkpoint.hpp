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

// "p2p-ckpt-v1" archive: a JSON header (metadata plus tensor directory)
// followed by raw little-endian float32 tensor data.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>
#include "p2p/model/model.hpp"

namespace p2p::model {

inline constexpr const char* kCheckpointFormat = "p2p-ckpt-v1";

struct NamedTensor {
  std::string name;
  Tensor<float> value;
};

struct Checkpoint {
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  const Tensor<float>& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& bytes);
// Writes through a temporary file and rename.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Parameters under "param/<name>" and the config under metadata "model_config".
Checkpoint model_checkpoint(const Model<float>& model);
Model<float> load_model(const Checkpoint& ckpt);

}  // namespace p2p::model
