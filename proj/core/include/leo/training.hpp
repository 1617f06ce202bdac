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

#ifndef LEO_TRAINING_HPP_
#define LEO_TRAINING_HPP_

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "leo/checkpoint.hpp"
#include "leo/loss.hpp"

namespace leo::train {

struct OptimConfig {
  double lr0 = 1e-4;
  double plateau_factor = 0.75;
  int plateau_patience = 2;
  double clip_norm = 3.0;
  int batch = 128;
  int max_epochs = 50;
  int early_stop_patience = 5;
  uint64_t seed = 0;
  double val_scenario_fraction = 0.25;

  void validate() const;
};

using GradMap = std::map<std::string, std::vector<double>>;

// Global-norm gradient clipping; returns the pre-clip norm and rescales in
// place so the post-clip norm equals max_norm when it was exceeded.
double clip_gradients(GradMap & grads, double max_norm);

class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(gat::ParamStore & params, const GradMap & grads, double lr);

 private:
  double beta1_, beta2_, eps_;
  long t_ = 0;
  std::map<std::string, std::vector<double>> m_, v_;
};

// Multiplies lr by `factor` after `patience` consecutive epochs without
// validation improvement.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr0, double factor, int patience)
      : lr_(lr0), factor_(factor), patience_(patience) {}
  void observe(double val_loss);
  double lr() const { return lr_; }

 private:
  double lr_;
  double factor_;
  int patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int since_improve_ = 0;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;  // last pre-clip norm of the epoch
  double val_giou = 0.0;
};

struct TrainResult {
  gat::Checkpoint checkpoint;  // best-validation parameters
  std::vector<EpochMetrics> history;
  int stopped_epoch = 0;
  double best_val_loss = 0.0;
  double final_train_giou = 0.0;  // mean GIoU of the returned model on the train split
};

// Train on pre-built (unnormalized) windows. Scenarios are split into
// train/val by scenario id (never by frame); with a single scenario the
// validation split degenerates to the train split.
TrainResult train_windows(const std::vector<graph::FusionGraph> & windows, const gat::GatConfig & model_cfg,
                          const LossConfig & loss_cfg, const OptimConfig & optim_cfg,
                          std::ostream * metrics_jsonl = nullptr);

// Convenience entry: builds windows from dataset frames first.
TrainResult train(const std::vector<sim::Frame> & frames, graph::LabelSource label_source,
                  const gat::GatConfig & model_cfg, const LossConfig & loss_cfg, const OptimConfig & optim_cfg,
                  std::ostream * metrics_jsonl = nullptr);

}  // namespace leo::train

#endif  // LEO_TRAINING_HPP_
