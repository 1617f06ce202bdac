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

#include "leo/gat.hpp"

#include <cmath>

#include "leo/rng.hpp"

namespace leo::gat {

size_t ParamStore::total_size() const {
  size_t n = 0;
  for (const auto & [name, arr] : tensors) n += arr.values.size();
  return n;
}

double * ParamStore::data(const std::string & name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw Error("unknown parameter '" + name + "'");
  return it->second.values.data();
}

std::map<std::string, nn::Shape> param_spec(const GatConfig & cfg) {
  auto h = static_cast<size_t>(cfg.hidden);
  std::map<std::string, nn::Shape> spec;
  spec["proj.W"] = {static_cast<size_t>(graph::kFeatureDim), h};
  spec["proj.b"] = {h};
  for (int l = 0; l < cfg.layers; ++l) {
    std::string p = "layer" + std::to_string(l) + ".";
    for (const char * branch : {"intra.", "inter."}) {
      spec[p + branch + "W"] = {h, h};
      spec[p + branch + "a_dst"] = {h};
      spec[p + branch + "a_src"] = {h};
    }
    spec[p + "lambda_raw"] = {1};
    spec[p + "ln.gain"] = {h};
    spec[p + "ln.bias"] = {h};
  }
  spec["head.W"] = {h, 8};
  spec["head.b"] = {8};
  return spec;
}

ParamStore init_params(const GatConfig & cfg, const std::array<double, 8> & head_bias) {
  ParamStore store;
  Rng rng(hash_counter(cfg.init_seed, 0x1417, 0, 0, 0));
  auto xavier = [&](const nn::Shape & shape) {
    size_t fan_in = shape.size() == 2 ? shape[0] : shape[0];
    size_t fan_out = shape.size() == 2 ? shape[1] : 1;
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    size_t n = 1;
    for (size_t d : shape) n *= d;
    std::vector<double> v(n);
    for (auto & x : v) x = rng.uniform(-limit, limit);
    return v;
  };
  // creation order fixes the RNG stream; the map re-sorts by name afterwards
  auto spec = param_spec(cfg);
  std::vector<std::string> order{"proj.W", "proj.b"};
  for (int l = 0; l < cfg.layers; ++l) {
    std::string p = "layer" + std::to_string(l) + ".";
    for (const char * b : {"intra.", "inter."}) {
      order.push_back(p + b + "W");
      order.push_back(p + b + "a_dst");
      order.push_back(p + b + "a_src");
    }
    order.push_back(p + "lambda_raw");
    order.push_back(p + "ln.gain");
    order.push_back(p + "ln.bias");
  }
  order.push_back("head.W");
  order.push_back("head.b");

  for (const auto & name : order) {
    const nn::Shape & shape = spec.at(name);
    Array arr;
    arr.shape = shape;
    if (name.ends_with("lambda_raw")) {
      arr.values = {0.0};  // sigmoid(0) = 0.5 blend
    } else if (name.ends_with("ln.gain")) {
      arr.values.assign(shape[0], 1.0);
    } else if (name.ends_with("ln.bias") || name == "proj.b") {
      arr.values.assign(shape[0], 0.0);
    } else if (name == "head.b") {
      arr.values.assign(head_bias.begin(), head_bias.end());
    } else if (name == "head.W") {
      // zero-started regression head: the first prediction is exactly the
      // bias (label mean) for every input
      arr.values.assign(shape[0] * shape[1], 0.0);
    } else {
      arr.values = xavier(shape);
    }
    store.tensors.emplace(name, std::move(arr));
  }
  return store;
}

const nn::Tensor & BoundParams::at(const std::string & name) const {
  auto it = t.find(name);
  if (it == t.end()) throw Error("unbound parameter '" + name + "'");
  return it->second;
}

BoundParams bind(nn::Tape & tape, const ParamStore & store, bool requires_grad) {
  BoundParams bp;
  for (const auto & [name, arr] : store.tensors) {
    bp.t.emplace(name, tape.leaf(arr.shape, arr.values, requires_grad));
  }
  return bp;
}

BranchEdges branch_edges(const graph::FusionGraph & g, int branch, int node_offset) {
  BranchEdges e;
  auto push = [&](int s, int d) {
    e.src.push_back(s + node_offset);
    e.dst.push_back(d + node_offset);
  };
  if (branch == 0) {
    // temporal edges act in both directions so attention flows past<->present
    for (auto [s, d] : g.edges_temporal) {
      push(s, d);
      push(d, s);
    }
  } else {
    for (auto [s, d] : g.edges_spatial) push(s, d);
  }
  for (auto [s, d] : g.edges_self) push(s, d);
  return e;
}

namespace {

using nn::Tensor;

struct LayerCtx {
  const GatConfig * cfg;
  const BoundParams * params;
  size_t num_nodes;
};

Tensor branch_message(nn::Tape & tape, const LayerCtx & ctx, const Tensor & x, const std::string & prefix,
                      const BranchEdges & edges) {
  auto heads = static_cast<size_t>(ctx.cfg->heads);
  Tensor h = nn::matmul(x, ctx.params->at(prefix + "W"));
  Tensor u = nn::sum_col_blocks(nn::mul_rowvec(h, ctx.params->at(prefix + "a_dst")), heads);
  Tensor v = nn::sum_col_blocks(nn::mul_rowvec(h, ctx.params->at(prefix + "a_src")), heads);
  Tensor logits = nn::add(nn::gather_rows(u, edges.dst), nn::gather_rows(v, edges.src));
  Tensor alpha = nn::segment_softmax(nn::leaky_relu(logits, ctx.cfg->leaky_slope), edges.dst, ctx.num_nodes);
  Tensor msgs = nn::scale_blocks(nn::gather_rows(h, edges.src), alpha);
  (void)tape;
  return nn::scatter_add_rows(msgs, edges.dst, ctx.num_nodes);
}

Tensor run_layers(nn::Tape & tape, const BoundParams & params, const GatConfig & cfg,
                  const std::vector<const graph::FusionGraph *> & graphs, const ForwardOptions & opt) {
  const size_t nodes_per_graph = graph::kNodes;
  const size_t n = graphs.size() * nodes_per_graph;

  std::vector<double> feat;
  feat.reserve(n * graph::kFeatureDim);
  for (const auto * g : graphs) feat.insert(feat.end(), g->features.begin(), g->features.end());
  Tensor x0 = tape.constant({n, graph::kFeatureDim}, std::move(feat));

  // batched branch edge lists (graph structure may differ per graph)
  BranchEdges intra, inter;
  for (size_t b = 0; b < graphs.size(); ++b) {
    if (graphs[b]->edges_self.size() != nodes_per_graph) {
      throw IsolatedNode("graph " + std::to_string(b) + " lacks self edges; every node needs a neighborhood");
    }
    int off = static_cast<int>(b * nodes_per_graph);
    for (int br = 0; br < 2; ++br) {
      BranchEdges e = branch_edges(*graphs[b], br, off);
      BranchEdges & acc = br == 0 ? intra : inter;
      acc.src.insert(acc.src.end(), e.src.begin(), e.src.end());
      acc.dst.insert(acc.dst.end(), e.dst.begin(), e.dst.end());
    }
  }

  Tensor x = nn::add(nn::matmul(x0, params.at("proj.W")), params.at("proj.b"));
  LayerCtx ctx{&cfg, &params, n};
  for (int l = 0; l < cfg.layers; ++l) {
    std::string p = "layer" + std::to_string(l) + ".";
    Tensor lambda = opt.lambda_override ? tape.scalar(*opt.lambda_override)
                                        : nn::sigmoid(params.at(p + "lambda_raw"));
    Tensor one_minus = nn::sub(tape.scalar(1.0), lambda);
    Tensor m_intra = branch_message(tape, ctx, x, p + "intra.", intra);
    Tensor m_inter = branch_message(tape, ctx, x, p + "inter.", inter);
    Tensor blended = nn::add(nn::mul(m_intra, lambda), nn::mul(m_inter, one_minus));
    Tensor normed = nn::layer_norm(blended, params.at(p + "ln.gain"), params.at(p + "ln.bias"));
    Tensor acted = nn::elu(normed);
    Tensor dropped = nn::dropout(acted, cfg.dropout_rate,
                                 {opt.seed, static_cast<uint64_t>(l), opt.step}, opt.training);
    x = nn::add(x, dropped);  // residual
  }
  return x;
}

}  // namespace

nn::Tensor forward_batch(nn::Tape & tape, const BoundParams & params, const GatConfig & cfg,
                         const std::vector<const graph::FusionGraph *> & graphs, const ForwardOptions & opt) {
  if (graphs.empty()) throw EmptyInput("forward_batch: no graphs");
  Tensor x = run_layers(tape, params, cfg, graphs, opt);
  Tensor pooled = cfg.max_pool ? nn::max_pool_groups(x, graph::kNodes) : nn::mean_pool_groups(x, graph::kNodes);
  return nn::add(nn::matmul(pooled, params.at("head.W")), params.at("head.b"));
}

nn::Tensor forward_nodes(nn::Tape & tape, const BoundParams & params, const GatConfig & cfg,
                         const graph::FusionGraph & g, const ForwardOptions & opt) {
  return run_layers(tape, params, cfg, {&g}, opt);
}

AttentionProbe attention_coefficients(const ParamStore & store, const GatConfig & cfg,
                                      const graph::FusionGraph & g, int layer, int branch, int head) {
  if (layer < 0 || layer >= cfg.layers) throw Error("layer out of range");
  if (head < 0 || head >= cfg.heads) throw Error("head out of range");
  nn::Tape tape;
  BoundParams params = bind(tape, store, false);
  ForwardOptions opt;  // eval mode

  // run the network up to the requested layer's input
  std::vector<const graph::FusionGraph *> graphs{&g};
  std::vector<double> feat(g.features);
  Tensor x0 = tape.constant({graph::kNodes, graph::kFeatureDim}, std::move(feat));
  Tensor x = nn::add(nn::matmul(x0, params.at("proj.W")), params.at("proj.b"));
  LayerCtx ctx{&cfg, &params, graph::kNodes};
  BranchEdges intra = branch_edges(g, 0);
  BranchEdges inter = branch_edges(g, 1);
  for (int l = 0; l < layer; ++l) {
    std::string p = "layer" + std::to_string(l) + ".";
    Tensor lambda = nn::sigmoid(params.at(p + "lambda_raw"));
    Tensor one_minus = nn::sub(tape.scalar(1.0), lambda);
    Tensor m_intra = branch_message(tape, ctx, x, p + "intra.", intra);
    Tensor m_inter = branch_message(tape, ctx, x, p + "inter.", inter);
    Tensor blended = nn::add(nn::mul(m_intra, lambda), nn::mul(m_inter, one_minus));
    Tensor normed = nn::layer_norm(blended, params.at(p + "ln.gain"), params.at(p + "ln.bias"));
    x = nn::add(x, nn::dropout(nn::elu(normed), cfg.dropout_rate, {opt.seed, static_cast<uint64_t>(l), 0},
                               false));
  }

  const BranchEdges & edges = branch == 0 ? intra : inter;
  std::string prefix = "layer" + std::to_string(layer) + "." + (branch == 0 ? "intra." : "inter.");
  auto heads = static_cast<size_t>(cfg.heads);
  Tensor h = nn::matmul(x, params.at(prefix + "W"));
  Tensor u = nn::sum_col_blocks(nn::mul_rowvec(h, params.at(prefix + "a_dst")), heads);
  Tensor v = nn::sum_col_blocks(nn::mul_rowvec(h, params.at(prefix + "a_src")), heads);
  Tensor logits = nn::add(nn::gather_rows(u, edges.dst), nn::gather_rows(v, edges.src));
  Tensor alpha = nn::segment_softmax(nn::leaky_relu(logits, cfg.leaky_slope), edges.dst, graph::kNodes);

  AttentionProbe probe;
  auto av = alpha.values();
  for (size_t e = 0; e < edges.src.size(); ++e) {
    probe.edges.emplace_back(edges.src[e], edges.dst[e]);
    probe.alpha.push_back(av[e * heads + static_cast<size_t>(head)]);
  }
  return probe;
}

geom::ParallelogramState decode_raw(const std::array<double, 8> & raw) {
  auto softplus = [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); };
  geom::ParallelogramState s;
  s.rf_x = raw[0];
  s.rf_y = raw[1];
  s.l = std::max(softplus(raw[2]), 1e-9);
  s.w = std::max(softplus(raw[3]), 1e-9);
  s.theta = geom::wrap_angle(raw[4]);
  double ts = geom::wrap_angle_half(raw[5]);
  s.theta_star = std::clamp(ts, 1e-9, M_PI - 1e-9);
  s.v_x = raw[6];
  s.v_y = raw[7];
  return s;
}

geom::ParallelogramState predict(const ParamStore & store, const GatConfig & cfg,
                                 const graph::FusionGraph & normalized, const ForwardOptions & opt) {
  nn::Tape tape;
  BoundParams params = bind(tape, store, false);
  nn::Tensor raw = forward_batch(tape, params, cfg, {&normalized}, opt);
  auto v = raw.values();
  std::array<double, 8> arr;
  std::copy(v.begin(), v.begin() + 8, arr.begin());
  return decode_raw(arr);
}

}  // namespace leo::gat
