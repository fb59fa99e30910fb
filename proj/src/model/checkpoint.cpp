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
#include "p2p/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "p2p/common/error.hpp"
#include "p2p/common/hash.hpp"
#include "p2p/model/json.hpp"

namespace p2p::model {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoints assume little-endian");

namespace {

constexpr char kMagic[8] = {'P', '2', 'P', 'C', 'K', 'P', 'T', '1'};

[[noreturn]] void corrupt(const std::string& what) {
  throw Error(ErrorCode::kCheckpoint, "invalid checkpoint: " + what);
}

}  // namespace

const Tensor<float>& Checkpoint::tensor(const std::string& name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return t.value;
  }
  throw Error(ErrorCode::kCheckpoint, "checkpoint has no tensor '" + name + "'");
}

bool Checkpoint::has_tensor(const std::string& name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string payload;
  json directory = json::array();
  for (const NamedTensor& t : ckpt.tensors) {
    directory.push_back({{"name", t.name},
                         {"shape", t.value.shape()},
                         {"offset", payload.size()},
                         {"count", t.value.size()}});
    payload.append(reinterpret_cast<const char*>(t.value.data()),
                   static_cast<std::size_t>(t.value.size()) * sizeof(float));
  }
  json header = {{"format", kCheckpointFormat},
                 {"metadata", ckpt.metadata},
                 {"tensors", directory},
                 {"payload_bytes", payload.size()},
                 {"payload_sha256", sha256_hex(payload)}};
  const std::string text = header.dump();
  std::string out(kMagic, sizeof kMagic);
  const std::uint64_t len = text.size();
  out.append(reinterpret_cast<const char*>(&len), sizeof len);
  out += text;
  out += payload;
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic + 8 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    corrupt("bad magic");
  }
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + sizeof kMagic, sizeof len);
  const std::size_t start = sizeof kMagic + sizeof len;
  if (len > bytes.size() - start) corrupt("truncated header");
  json header;
  try {
    header = json::parse(bytes.substr(start, len));
  } catch (const json::exception& e) {
    corrupt(std::string("header: ") + e.what());
  }
  Checkpoint ckpt;
  try {
    if (header.at("format").get<std::string>() != kCheckpointFormat) {
      corrupt("unsupported format " + header.at("format").dump());
    }
    const std::string payload = bytes.substr(start + len);
    if (payload.size() != header.at("payload_bytes").get<std::size_t>()) corrupt("truncated payload");
    if (sha256_hex(payload) != header.at("payload_sha256").get<std::string>()) {
      corrupt("payload checksum mismatch");
    }
    ckpt.metadata = header.at("metadata");
    for (const json& t : header.at("tensors")) {
      const auto shape = t.at("shape").get<nn::Shape>();
      const auto offset = t.at("offset").get<std::size_t>();
      const auto count = t.at("count").get<std::int64_t>();
      if (nn::shape_numel(shape) != count ||
          offset + static_cast<std::size_t>(count) * sizeof(float) > payload.size()) {
        corrupt("tensor '" + t.at("name").get<std::string>() + "' out of range");
      }
      Tensor<float> value(shape);
      std::memcpy(value.data(), payload.data() + offset,
                  static_cast<std::size_t>(count) * sizeof(float));
      ckpt.tensors.push_back({t.at("name").get<std::string>(), std::move(value)});
    }
  } catch (const json::exception& e) {
    corrupt(std::string("header schema: ") + e.what());
  }
  return ckpt;
}

void write_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename " + tmp.string() + ": " + ec.message());
}

Checkpoint read_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

Checkpoint model_checkpoint(const Model<float>& model) {
  Checkpoint ckpt;
  ckpt.metadata["model_config"] = model.config();
  const auto& store = model.params();
  for (std::size_t i = 0; i < store.vars().size(); ++i) {
    ckpt.tensors.push_back({"param/" + store.names()[i], store.vars()[i].value()});
  }
  return ckpt;
}

Model<float> load_model(const Checkpoint& ckpt) {
  if (!ckpt.metadata.contains("model_config")) corrupt("missing model_config");
  ModelConfig cfg;
  try {
    cfg = ckpt.metadata.at("model_config").get<ModelConfig>();
  } catch (const json::exception& e) {
    corrupt(std::string("model_config: ") + e.what());
  }
  Model<float> model(cfg, 0);
  auto& store = model.params();
  for (std::size_t i = 0; i < store.vars().size(); ++i) {
    const Tensor<float>& t = ckpt.tensor("param/" + store.names()[i]);
    if (t.shape() != store.vars()[i].shape()) {
      corrupt("shape mismatch for " + store.names()[i]);
    }
    store.vars()[i].mutable_value() = t;
  }
  return model;
}

}  // namespace p2p::model
