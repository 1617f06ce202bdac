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

#include "leo/loss.hpp"

#include <cmath>

namespace leo::train {

void LossConfig::validate() const {
  for (double b : beta) {
    if (b < 0.0) throw InvalidConfig("negative beta weight");
  }
  if (smooth_l1_beta <= 0.0) throw InvalidConfig("smooth_l1_beta must be positive");
  if (alpha < 0.0 || alpha > 1.0) throw InvalidConfig("alpha outside [0,1]");
  if (lambda_iou < 0.0) throw InvalidConfig("negative lambda_iou");
}

double wrap_diff_2pi(double d) {
  return d - 2.0 * M_PI * std::floor((d + M_PI) / (2.0 * M_PI));
}

double wrap_diff_pi(double d) { return d - M_PI * std::floor((d + 0.5 * M_PI) / M_PI); }

namespace {

double smooth_l1(double d, double beta) {
  double ad = std::abs(d);
  return ad < beta ? 0.5 * d * d / beta : ad - 0.5 * beta;
}

}  // namespace

double param_loss(const std::array<double, 8> & pred, const std::array<double, 8> & label,
                  const LossConfig & cfg) {
  double acc = 0.0;
  for (int i = 0; i < 8; ++i) {
    double d = pred[i] - label[i];
    if (i == 4) d = wrap_diff_2pi(d);
    if (i == 5) d = wrap_diff_pi(d);
    acc += cfg.beta[static_cast<size_t>(i)] * smooth_l1(d, cfg.smooth_l1_beta);
  }
  return acc;
}

double iou_loss(const geom::ParallelogramState & pred, const geom::ParallelogramState & label,
                const LossConfig & cfg) {
  auto pa = geom::state_to_polygon(pred);
  auto pb = geom::state_to_polygon(label);
  double g = geom::giou(pa, pb);
  double d = geom::diou(pa, pb);
  return cfg.alpha * (1.0 - g) + (1.0 - cfg.alpha) * (1.0 - d);
}

double total_loss(const geom::ParallelogramState & pred, const geom::ParallelogramState & label,
                  const LossConfig & cfg) {
  return param_loss(pred.to_array(), label.to_array(), cfg) + cfg.lambda_iou * iou_loss(pred, label, cfg);
}

// --- tape route ---------------------------------------------------------------

namespace {

using nn::Sc;

Sc smooth_l1_t(const Sc & d, double beta) {
  double v = nn::value_of(d);
  if (std::abs(v) < beta) return d * d * (0.5 / beta);
  // |d| = sign(d) * d on the active branch
  return (v >= 0.0 ? d : -d) - 0.5 * beta;
}

// wrap with the shift frozen at the evaluated point (gradient 1)
Sc wrap_diff_2pi_t(const Sc & d) {
  double k = std::floor((nn::value_of(d) + M_PI) / (2.0 * M_PI));
  return d - 2.0 * M_PI * k;
}

Sc wrap_diff_pi_t(const Sc & d) {
  double k = std::floor((nn::value_of(d) + 0.5 * M_PI) / M_PI);
  return d - M_PI * k;
}

Sc softplus_sc(const Sc & x) { return {nn::softplus(x.t)}; }

std::vector<geom::Vec2T<Sc>> constant_polygon(nn::Tape & tape, const geom::ConvexPolygon & poly) {
  std::vector<geom::Vec2T<Sc>> out;
  for (const auto & v : poly.vertices()) {
    out.push_back({Sc{tape.scalar(v.x)}, Sc{tape.scalar(v.y)}});
  }
  return out;
}

}  // namespace

DecodedRow decode_row(const nn::Tensor & raw, size_t row) {
  auto sc = [&](size_t col) { return Sc{nn::slice_scalar(raw, row, col)}; };
  DecodedRow d{sc(0), sc(1), softplus_sc(sc(2)), softplus_sc(sc(3)), sc(4), sc(5), sc(6), sc(7)};
  // shift theta_star into (0, pi) so the decoded ring stays CCW; the shift is
  // constant at the evaluated point (gradient 1)
  double ts = nn::value_of(d.theta_star);
  double k = std::floor(ts / M_PI);
  if (k != 0.0) d.theta_star = d.theta_star - M_PI * k;
  // freeze at the degenerate boundaries (subgradient 0)
  double tsv = nn::value_of(d.theta_star);
  if (tsv < 1e-3 || tsv > M_PI - 1e-3) {
    d.theta_star = nn::scalar_like(d.theta_star, std::clamp(tsv, 1e-3, M_PI - 1e-3));
  }
  return d;
}

nn::Tensor param_loss_t(const nn::Tensor & raw, size_t row, const std::array<double, 8> & label,
                        const LossConfig & cfg) {
  DecodedRow d = decode_row(raw, row);
  std::array<Sc, 8> pred{d.rf_x, d.rf_y, d.l, d.w, d.theta, d.theta_star, d.v_x, d.v_y};
  Sc acc = nn::scalar_like(pred[0], 0.0);
  for (int i = 0; i < 8; ++i) {
    Sc diff = pred[static_cast<size_t>(i)] - label[static_cast<size_t>(i)];
    if (i == 4) diff = wrap_diff_2pi_t(diff);
    if (i == 5) diff = wrap_diff_pi_t(diff);
    acc = acc + cfg.beta[static_cast<size_t>(i)] * smooth_l1_t(diff, cfg.smooth_l1_beta);
  }
  return acc.t;
}

nn::Tensor iou_loss_t(const nn::Tensor & raw, size_t row, const geom::ParallelogramState & label,
                      const LossConfig & cfg) {
  nn::Tape & tape = *raw.tape;
  DecodedRow d = decode_row(raw, row);
  auto verts = geom::parallelogram_vertices<Sc>(d.rf_x, d.rf_y, d.l, d.w, d.theta, d.theta_star);
  std::vector<geom::Vec2T<Sc>> pred_poly(verts.begin(), verts.end());
  auto label_poly = constant_polygon(tape, geom::state_to_polygon(label));
  auto m = geom::overlap_metrics_impl(pred_poly, label_poly);
  Sc loss = cfg.alpha * (1.0 - m.giou) + (1.0 - cfg.alpha) * (1.0 - m.diou);
  return loss.t;
}

nn::Tensor total_loss_t(const nn::Tensor & raw, const std::vector<geom::ParallelogramState> & labels,
                        const LossConfig & cfg) {
  if (labels.empty() || raw.rows() != labels.size() || raw.cols() != 8) {
    throw ShapeMismatch("total_loss_t: raw output rows must match label count");
  }
  nn::Tape & tape = *raw.tape;
  nn::Tensor acc = tape.scalar(0.0);
  for (size_t b = 0; b < labels.size(); ++b) {
    nn::Tensor lp = param_loss_t(raw, b, labels[b].to_array(), cfg);
    nn::Tensor li = iou_loss_t(raw, b, labels[b], cfg);
    acc = nn::add(acc, nn::add(lp, nn::scale_const(li, cfg.lambda_iou)));
  }
  return nn::scale_const(acc, 1.0 / static_cast<double>(labels.size()));
}

}  // namespace leo::train
