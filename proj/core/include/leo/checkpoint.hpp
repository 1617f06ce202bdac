// Copyright 2026 The leofuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LEO_CHECKPOINT_HPP_
#define LEO_CHECKPOINT_HPP_

#include <string>

#include <json.hpp>

#include "leo/gat.hpp"
#include "leo/graph.hpp"

namespace leo::gat {

using json = nlohmann::json;

// Versioned JSON container: parameter tensors (shapes + flat 64-bit
// values), feature-normalization stats, a config echo, and a content hash
// validated on load.
struct Checkpoint {
  ParamStore params;
  graph::FeatureStats stats;
  GatConfig model;
  json config_echo;  // full effective run configuration
};

json gat_config_to_json(const GatConfig & cfg);
GatConfig gat_config_from_json(const json & j);

std::string checkpoint_to_string(const Checkpoint & ckpt);
Checkpoint checkpoint_from_string(const std::string & text);

void save_checkpoint(const Checkpoint & ckpt, const std::string & path);
Checkpoint load_checkpoint(const std::string & path);

}  // namespace leo::gat

#endif  // LEO_CHECKPOINT_HPP_
