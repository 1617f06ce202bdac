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

#ifndef LEO_DATASET_HPP_
#define LEO_DATASET_HPP_

#include <string>
#include <vector>

#include <json.hpp>

#include "leo/simulator.hpp"

namespace leo::io {

using json = nlohmann::json;

// JSONL container, one frame per line after the
// {"schema":"leo-dataset","version":1} header line.
void write_dataset(const std::vector<sim::Frame> & frames, const std::string & path);
std::vector<sim::Frame> read_dataset(const std::string & path);

std::string dataset_to_string(const std::vector<sim::Frame> & frames);
std::vector<sim::Frame> dataset_from_string(const std::string & text);

json frame_to_json(const sim::Frame & f);
sim::Frame frame_from_json(const json & j);

std::string read_file(const std::string & path);
void write_file(const std::string & path, const std::string & content);

}  // namespace leo::io

#endif  // LEO_DATASET_HPP_
