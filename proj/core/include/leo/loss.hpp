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

#ifndef LEO_LOSS_HPP_
#define LEO_LOSS_HPP_

#include <array>
#include <vector>

#include "leo/gat.hpp"
#include "leo/geometry.hpp"
#include "leo/tensor.hpp"

namespace leo::train {

// Composite training objective: per-parameter SmoothL1 plus a blended
// (1-GIoU)/(1-DIoU) geometry term, differentiable end to end through the
// polygon clipping (exact gradients away from degeneracies, subgradient 0
// at vertex-contact configurations).
struct LossConfig {
  std::array<double, 8> beta{1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  double smooth_l1_beta = 1.0;
  double alpha = 0.5;       // GIoU vs DIoU mix
  double lambda_iou = 1.0;  // geometry-loss weight

  void validate() const;
};

// Angle wrap helpers used by losses and evaluation (theta has period 2*pi,
// theta_star period pi).
double wrap_diff_2pi(double d);
double wrap_diff_pi(double d);

// --- plain-double route (reference values, evaluation) -----------------------

double param_loss(const std::array<double, 8> & pred, const std::array<double, 8> & label,
                  const LossConfig & cfg);
double iou_loss(const geom::ParallelogramState & pred, const geom::ParallelogramState & label,
                const LossConfig & cfg);
double total_loss(const geom::ParallelogramState & pred, const geom::ParallelogramState & label,
                  const LossConfig & cfg);

// --- tape route (training) ---------------------------------------------------

// Decoded prediction scalars for one row of the raw [B,8] head output.
struct DecodedRow {
  nn::Sc rf_x, rf_y, l, w, theta, theta_star;
  nn::Sc v_x, v_y;
};
DecodedRow decode_row(const nn::Tensor & raw, size_t row);

nn::Tensor param_loss_t(const nn::Tensor & raw, size_t row, const std::array<double, 8> & label,
                        const LossConfig & cfg);
nn::Tensor iou_loss_t(const nn::Tensor & raw, size_t row, const geom::ParallelogramState & label,
                      const LossConfig & cfg);

// Batch mean of param + lambda_iou * iou.
nn::Tensor total_loss_t(const nn::Tensor & raw, const std::vector<geom::ParallelogramState> & labels,
                        const LossConfig & cfg);

}  // namespace leo::train

#endif  // LEO_LOSS_HPP_
