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

#ifndef LEO_GAT_HPP_
#define LEO_GAT_HPP_

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "leo/graph.hpp"
#include "leo/tensor.hpp"

namespace leo::gat {

// Dual-attention graph network over the 48-node fusion graph: input
// projection 11 -> hidden, `layers` attention blocks (temporal/intra and
// spatial/inter branches blended by a learned lambda), node pooling, and an
// 8-parameter regression head.

struct GatConfig {
  int hidden = 128;
  int heads = 4;
  int layers = 4;
  double dropout_rate = 0.1;
  double leaky_slope = 0.2;
  bool max_pool = false;  // mean pooling by default
  uint64_t init_seed = 42;
};

struct Array {
  nn::Shape shape;
  std::vector<double> values;
};

// Named parameter tensors; std::map keeps iteration (and hence every
// optimizer sweep) in one deterministic order.
struct ParamStore {
  std::map<std::string, Array> tensors;

  size_t total_size() const;
  double * data(const std::string & name);
};

// Expected parameter names/shapes for a config.
std::map<std::string, nn::Shape> param_spec(const GatConfig & cfg);

// Xavier-style init; the head bias can be seeded with the training-label
// mean so the regression starts in range.
ParamStore init_params(const GatConfig & cfg, const std::array<double, 8> & head_bias = {});

struct BoundParams {
  std::map<std::string, nn::Tensor> t;
  const nn::Tensor & at(const std::string & name) const;
};

BoundParams bind(nn::Tape & tape, const ParamStore & store, bool requires_grad);

struct ForwardOptions {
  bool training = false;
  uint64_t seed = 0;
  uint64_t step = 0;
  // Forces the blend toward the temporal branch (1.0 disables inter-modal
  // attention entirely).
  std::optional<double> lambda_override;
};

// Raw (undecoded) [B, 8] head output for a batch of normalized graphs.
nn::Tensor forward_batch(nn::Tape & tape, const BoundParams & params, const GatConfig & cfg,
                         const std::vector<const graph::FusionGraph *> & graphs, const ForwardOptions & opt);

// Final node embeddings [48, hidden] of a single graph (pre-pooling).
nn::Tensor forward_nodes(nn::Tape & tape, const BoundParams & params, const GatConfig & cfg,
                         const graph::FusionGraph & g, const ForwardOptions & opt);

// Attention coefficients of one branch/head for a single graph, plus the
// directed edge list they refer to. branch: 0 = intra (temporal+self),
// 1 = inter (spatial+self).
struct AttentionProbe {
  std::vector<std::pair<int, int>> edges;  // (src, dst)
  std::vector<double> alpha;               // per edge
};
AttentionProbe attention_coefficients(const ParamStore & store, const GatConfig & cfg,
                                      const graph::FusionGraph & g, int layer, int branch, int head);

// Decode a raw head row into a valid state (positive extents via softplus,
// wrapped angles).
geom::ParallelogramState decode_raw(const std::array<double, 8> & raw);

// Convenience single-graph eval-mode prediction.
geom::ParallelogramState predict(const ParamStore & store, const GatConfig & cfg,
                                 const graph::FusionGraph & normalized, const ForwardOptions & opt = {});

// Directed edge lists the attention branches run on (intra: temporal both
// directions + self; inter: spatial + self), with per-graph offsets.
struct BranchEdges {
  std::vector<int> src;
  std::vector<int> dst;
};
BranchEdges branch_edges(const graph::FusionGraph & g, int branch, int node_offset = 0);

}  // namespace leo::gat

#endif  // LEO_GAT_HPP_
