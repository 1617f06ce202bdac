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

#include "leo/checkpoint.hpp"

#include "leo/dataset.hpp"
#include "leo/fnv.hpp"
#include "leo/version.hpp"

namespace leo::gat {

json gat_config_to_json(const GatConfig & cfg) {
  return json{{"hidden", cfg.hidden},           {"heads", cfg.heads},
              {"layers", cfg.layers},           {"dropout", cfg.dropout_rate},
              {"leaky_slope", cfg.leaky_slope}, {"max_pool", cfg.max_pool},
              {"init_seed", cfg.init_seed}};
}

GatConfig gat_config_from_json(const json & j) {
  GatConfig cfg;
  cfg.hidden = j.value("hidden", cfg.hidden);
  cfg.heads = j.value("heads", cfg.heads);
  cfg.layers = j.value("layers", cfg.layers);
  cfg.dropout_rate = j.value("dropout", cfg.dropout_rate);
  cfg.leaky_slope = j.value("leaky_slope", cfg.leaky_slope);
  cfg.max_pool = j.value("max_pool", cfg.max_pool);
  cfg.init_seed = j.value("init_seed", cfg.init_seed);
  if (cfg.hidden <= 0 || cfg.heads <= 0 || cfg.layers <= 0 || cfg.hidden % cfg.heads != 0) {
    throw SchemaMismatch("invalid model config: hidden must be positive and divisible by heads");
  }
  return cfg;
}

namespace {

json payload_json(const Checkpoint & ckpt) {
  json params = json::object();
  for (const auto & [name, arr] : ckpt.params.tensors) {
    params[name] = {{"shape", arr.shape}, {"values", arr.values}};
  }
  json stats = {{"mean", std::vector<double>(ckpt.stats.mean.begin(), ckpt.stats.mean.end())},
                {"std", std::vector<double>(ckpt.stats.std.begin(), ckpt.stats.std.end())}};
  return json{{"model", gat_config_to_json(ckpt.model)},
              {"config", ckpt.config_echo},
              {"stats", stats},
              {"params", params}};
}

}  // namespace

std::string checkpoint_to_string(const Checkpoint & ckpt) {
  json payload = payload_json(ckpt);
  json root;
  root["schema"] = "leo-checkpoint";
  root["version"] = kCheckpointSchemaVersion;
  root["param_count"] = ckpt.params.total_size();
  root["hash"] = fnv1a_hex(payload.dump());
  root["payload"] = std::move(payload);
  return root.dump();
}

Checkpoint checkpoint_from_string(const std::string & text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception & e) {
    throw SchemaMismatch(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (root.value("schema", "") != "leo-checkpoint") throw SchemaMismatch("not a leo-checkpoint file");
  int version = root.value("version", -1);
  if (version != kCheckpointSchemaVersion) {
    throw SchemaMismatch("checkpoint version " + std::to_string(version) + ", expected " +
                         std::to_string(kCheckpointSchemaVersion));
  }
  const json & payload = root.at("payload");
  std::string expect = root.value("hash", "");
  std::string actual = fnv1a_hex(payload.dump());
  if (expect != actual) {
    throw HashMismatch("checkpoint content hash " + actual + " does not match recorded " + expect);
  }

  Checkpoint ckpt;
  ckpt.model = gat_config_from_json(payload.at("model"));
  ckpt.config_echo = payload.value("config", json::object());
  auto mean = payload.at("stats").at("mean").get<std::vector<double>>();
  auto stdv = payload.at("stats").at("std").get<std::vector<double>>();
  if (mean.size() != graph::kFeatureDim || stdv.size() != graph::kFeatureDim) {
    throw SchemaMismatch("stats vectors must have 11 entries");
  }
  std::copy(mean.begin(), mean.end(), ckpt.stats.mean.begin());
  std::copy(stdv.begin(), stdv.end(), ckpt.stats.std.begin());
  ckpt.stats.valid = true;

  auto spec = param_spec(ckpt.model);
  for (const auto & [name, j] : payload.at("params").items()) {
    Array arr;
    arr.shape = j.at("shape").get<nn::Shape>();
    arr.values = j.at("values").get<std::vector<double>>();
    auto it = spec.find(name);
    if (it == spec.end()) throw ShapeMismatch("unexpected parameter '" + name + "'");
    if (it->second != arr.shape) throw ShapeMismatch("parameter '" + name + "' has the wrong shape");
    size_t n = 1;
    for (size_t d : arr.shape) n *= d;
    if (n != arr.values.size()) throw ShapeMismatch("parameter '" + name + "' value count mismatch");
    ckpt.params.tensors.emplace(name, std::move(arr));
  }
  if (ckpt.params.tensors.size() != spec.size()) {
    throw ShapeMismatch("checkpoint is missing parameters (" + std::to_string(ckpt.params.tensors.size()) +
                        " of " + std::to_string(spec.size()) + ")");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint & ckpt, const std::string & path) {
  io::write_file(path, checkpoint_to_string(ckpt));
}

Checkpoint load_checkpoint(const std::string & path) { return checkpoint_from_string(io::read_file(path)); }

}  // namespace leo::gat
