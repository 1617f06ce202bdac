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

#ifndef LEO_EVALUATION_HPP_
#define LEO_EVALUATION_HPP_

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "leo/checkpoint.hpp"
#include "leo/loss.hpp"

namespace leo::eval {

using json = nlohmann::json;

enum class LengthClass { L1, L2, OTHER };
const char * length_class_name(LengthClass c);

// Length stratification (cars/vans vs buses/trucks) and lane partition of a
// label: l1 for l in [3,10] m, l2 above 10 m; lane by centroid lateral
// position.
std::pair<LengthClass, sim::Lane> stratify(const geom::ParallelogramState & label);

struct EvalOptions {
  std::set<fusion::SensorId> drop_sensors;  // sources blanked to the missing sentinel
  bool no_inter_attention = false;          // forces lambda = 1 in every layer
  int latency_warmup = 10;
  int latency_samples = 200;
  bool measure_latency = true;
};

// Runs the model over every full window of the dataset and aggregates
// GIoU/DIoU/MAE (plus CP/FP corner errors) per (length class x lane)
// stratum against ground truth.
json evaluate(const gat::Checkpoint & ckpt, const std::vector<sim::Frame> & frames, const EvalOptions & opt);

// Same metric stack applied to the geometric auto-labels; report schema is
// identical to evaluate().
json compare_baseline(const std::vector<sim::Frame> & frames);

void write_report_csv(const json & report, const std::string & path);
void write_report_svg(const json & report, const std::string & path);

}  // namespace leo::eval

#endif  // LEO_EVALUATION_HPP_
