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

#include "leo/training.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "leo/rng.hpp"

namespace leo::train {

void OptimConfig::validate() const {
  if (lr0 <= 0.0) throw InvalidConfig("lr0 must be positive");
  if (plateau_factor <= 0.0 || plateau_factor >= 1.0) throw InvalidConfig("plateau_factor outside (0,1)");
  if (plateau_patience <= 0 || early_stop_patience <= 0) throw InvalidConfig("patience must be positive");
  if (clip_norm <= 0.0) throw InvalidConfig("clip_norm must be positive");
  if (batch <= 0 || max_epochs <= 0) throw InvalidConfig("batch/max_epochs must be positive");
  if (val_scenario_fraction < 0.0 || val_scenario_fraction > 0.9) {
    throw InvalidConfig("val_scenario_fraction outside [0, 0.9]");
  }
}

double clip_gradients(GradMap & grads, double max_norm) {
  double sq = 0.0;
  for (const auto & [name, g] : grads) {
    for (double v : g) sq += v * v;
  }
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    double scale = max_norm / norm;
    for (auto & [name, g] : grads) {
      for (double & v : g) v *= scale;
    }
  }
  return norm;
}

void Adam::step(gat::ParamStore & params, const GradMap & grads, double lr) {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, t_);
  double bc2 = 1.0 - std::pow(beta2_, t_);
  for (auto & [name, arr] : params.tensors) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const auto & g = git->second;
    auto & m = m_[name];
    auto & v = v_[name];
    if (m.empty()) m.assign(g.size(), 0.0);
    if (v.empty()) v.assign(g.size(), 0.0);
    for (size_t i = 0; i < g.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      arr.values[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void PlateauScheduler::observe(double val_loss) {
  if (val_loss < best_ - 1e-12) {
    best_ = val_loss;
    since_improve_ = 0;
    return;
  }
  if (++since_improve_ >= patience_) {
    lr_ *= factor_;
    since_improve_ = 0;
  }
}

namespace {

double inverse_softplus(double y) {
  if (y > 30.0) return y;
  return std::log(std::expm1(std::max(y, 1e-6)));
}

std::array<double, 8> head_bias_from_labels(const std::vector<const graph::FusionGraph *> & windows) {
  std::array<double, 8> mean{};
  for (const auto * w : windows) {
    auto a = w->target.to_array();
    for (int i = 0; i < 8; ++i) mean[static_cast<size_t>(i)] += a[static_cast<size_t>(i)];
  }
  for (auto & v : mean) v /= static_cast<double>(windows.size());
  // raw head space: extents go through softplus at decode time
  mean[2] = inverse_softplus(mean[2]);
  mean[3] = inverse_softplus(mean[3]);
  return mean;
}

struct EvalStats {
  double loss = 0.0;
  double giou = 0.0;
};

EvalStats evaluate_split(const gat::ParamStore & params, const gat::GatConfig & cfg,
                         const std::vector<graph::FusionGraph> & split, const LossConfig & loss_cfg) {
  EvalStats st;
  if (split.empty()) return st;
  for (const auto & w : split) {
    geom::ParallelogramState pred = gat::predict(params, cfg, w);
    st.loss += total_loss(pred, w.target, loss_cfg);
    st.giou += geom::giou(geom::state_to_polygon(pred), geom::state_to_polygon(w.target));
  }
  st.loss /= static_cast<double>(split.size());
  st.giou /= static_cast<double>(split.size());
  return st;
}

}  // namespace

TrainResult train_windows(const std::vector<graph::FusionGraph> & windows, const gat::GatConfig & model_cfg,
                          const LossConfig & loss_cfg, const OptimConfig & optim_cfg,
                          std::ostream * metrics_jsonl) {
  loss_cfg.validate();
  optim_cfg.validate();
  if (windows.empty()) throw EmptyDataset("no training windows");

  // scenario-level split, never frame-level
  std::set<int> scenario_ids;
  for (const auto & w : windows) scenario_ids.insert(w.scenario_id);
  std::vector<int> ids(scenario_ids.begin(), scenario_ids.end());
  size_t n_val = ids.size() >= 2
                     ? std::max<size_t>(1, static_cast<size_t>(std::floor(optim_cfg.val_scenario_fraction *
                                                                          static_cast<double>(ids.size()))))
                     : 0;
  if (optim_cfg.val_scenario_fraction == 0.0) n_val = 0;
  std::set<int> val_ids(ids.end() - static_cast<long>(n_val), ids.end());

  std::vector<const graph::FusionGraph *> train_raw, val_raw;
  for (const auto & w : windows) {
    (val_ids.count(w.scenario_id) ? val_raw : train_raw).push_back(&w);
  }
  if (train_raw.empty()) throw EmptyDataset("train split is empty");

  graph::FeatureStats stats;
  {
    std::vector<graph::FusionGraph> train_copy;
    train_copy.reserve(train_raw.size());
    for (const auto * w : train_raw) train_copy.push_back(*w);
    stats = graph::compute_feature_stats(train_copy);
  }

  std::vector<graph::FusionGraph> train_norm, val_norm;
  train_norm.reserve(train_raw.size());
  for (const auto * w : train_raw) train_norm.push_back(graph::normalize_features(*w, stats));
  for (const auto * w : val_raw) val_norm.push_back(graph::normalize_features(*w, stats));
  // single-scenario datasets validate on the train split
  const std::vector<graph::FusionGraph> & val_split = val_norm.empty() ? train_norm : val_norm;

  gat::ParamStore params = gat::init_params(model_cfg, head_bias_from_labels(train_raw));
  Adam adam;
  PlateauScheduler sched(optim_cfg.lr0, optim_cfg.plateau_factor, optim_cfg.plateau_patience);

  TrainResult result;
  gat::ParamStore best_params = params;
  double best_val = std::numeric_limits<double>::infinity();
  int since_improve = 0;
  uint64_t global_step = 0;

  std::vector<size_t> order(train_norm.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < optim_cfg.max_epochs; ++epoch) {
    Rng shuffle_rng(hash_counter(optim_cfg.seed, 0x5471, static_cast<uint64_t>(epoch), 0, 0));
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }

    double epoch_loss = 0.0;
    double last_grad_norm = 0.0;
    size_t batches = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(optim_cfg.batch)) {
      size_t end = std::min(order.size(), start + static_cast<size_t>(optim_cfg.batch));
      std::vector<const graph::FusionGraph *> batch;
      std::vector<geom::ParallelogramState> labels;
      for (size_t i = start; i < end; ++i) {
        batch.push_back(&train_norm[order[i]]);
        labels.push_back(train_norm[order[i]].target);
      }
      nn::Tape tape;
      gat::BoundParams bound = gat::bind(tape, params, true);
      gat::ForwardOptions opt;
      opt.training = true;
      opt.seed = optim_cfg.seed;
      opt.step = global_step;
      nn::Tensor raw = gat::forward_batch(tape, bound, model_cfg, batch, opt);
      nn::Tensor loss = total_loss_t(raw, labels, loss_cfg);
      double loss_v = loss.value();
      if (!std::isfinite(loss_v)) {
        throw NonFiniteLoss("batch " + std::to_string(batches) + " of epoch " + std::to_string(epoch));
      }
      epoch_loss += loss_v;
      ++batches;
      tape.backward(loss);

      GradMap grads;
      for (const auto & [name, tensor] : bound.t) {
        auto g = tape.grad(tensor);
        grads.emplace(name, std::vector<double>(g.begin(), g.end()));
      }
      last_grad_norm = clip_gradients(grads, optim_cfg.clip_norm);
      adam.step(params, grads, sched.lr());
      ++global_step;
    }
    epoch_loss /= static_cast<double>(std::max<size_t>(batches, 1));

    EvalStats val = evaluate_split(params, model_cfg, val_split, loss_cfg);

    EpochMetrics em{epoch, epoch_loss, val.loss, sched.lr(), last_grad_norm, val.giou};
    result.history.push_back(em);
    if (metrics_jsonl) {
      (*metrics_jsonl) << "{\"epoch\":" << em.epoch << ",\"train_loss\":" << em.train_loss
                       << ",\"val_loss\":" << em.val_loss << ",\"lr\":" << em.lr
                       << ",\"grad_norm\":" << em.grad_norm << ",\"val_giou\":" << em.val_giou << "}\n";
    }

    if (val.loss < best_val - 1e-12) {
      best_val = val.loss;
      best_params = params;
      since_improve = 0;
    } else {
      ++since_improve;
    }
    sched.observe(val.loss);
    result.stopped_epoch = epoch;
    if (since_improve >= optim_cfg.early_stop_patience) break;
  }

  result.final_train_giou = evaluate_split(best_params, model_cfg, train_norm, loss_cfg).giou;
  result.best_val_loss = best_val;
  result.checkpoint.params = std::move(best_params);
  result.checkpoint.stats = stats;
  result.checkpoint.model = model_cfg;
  return result;
}

TrainResult train(const std::vector<sim::Frame> & frames, graph::LabelSource label_source,
                  const gat::GatConfig & model_cfg, const LossConfig & loss_cfg, const OptimConfig & optim_cfg,
                  std::ostream * metrics_jsonl) {
  auto windows = graph::build_windows(frames, label_source);
  if (windows.empty()) throw EmptyDataset("dataset yields no 120 ms windows");
  return train_windows(windows, model_cfg, loss_cfg, optim_cfg, metrics_jsonl);
}

}  // namespace leo::train
