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
#include "p2p/common/parallel.hpp"

#include <cstdlib>
#include <string>

namespace p2p {

int configure_workers() {
  if (const char* env = std::getenv("P2P_NUM_WORKERS"); env != nullptr) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1 && cap < max_workers()) set_workers(cap);
    } catch (const std::exception&) {
      // unparsable value: keep the runtime default
    }
  }
  return max_workers();
}

}  // namespace p2p
