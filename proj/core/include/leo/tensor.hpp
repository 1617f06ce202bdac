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

#ifndef LEO_TENSOR_HPP_
#define LEO_TENSOR_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "leo/errors.hpp"

namespace leo::nn {

// Dense 64-bit tensors on a reverse-mode tape. Shapes are rank 1 ({n}) or
// rank 2 ({rows, cols}); a scalar is {1}. Every op records a pullback
// closure; Tape::backward replays them in exact reverse order.

using Shape = std::vector<size_t>;

class Tape;

struct Tensor {
  Tape * tape = nullptr;
  int id = -1;

  const Shape & shape() const;
  size_t size() const;
  size_t rows() const;
  size_t cols() const;
  double value() const;  // scalar tensors only
  std::span<const double> values() const;
};

class Tape {
 public:
  struct Node {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
    std::function<void(Tape &)> pullback;  // empty for leaves/constants
  };

  Tensor leaf(Shape shape, std::vector<double> values, bool requires_grad = false);
  Tensor scalar(double v) { return leaf({1}, {v}, false); }
  Tensor constant(Shape shape, std::vector<double> values) { return leaf(std::move(shape), std::move(values)); }

  // Gradient of `loss` (a scalar) w.r.t. every requires_grad node. A tape
  // can be consumed exactly once.
  void backward(const Tensor & loss);

  std::span<const double> grad(const Tensor & t) const;
  bool backward_done() const { return backward_done_; }
  size_t num_nodes() const { return nodes_.size(); }

  Node & node(int id) { return nodes_[static_cast<size_t>(id)]; }
  const Node & node(int id) const { return nodes_[static_cast<size_t>(id)]; }
  int emplace(Shape shape, std::vector<double> values, bool requires_grad, std::function<void(Tape &)> pb);

 private:
  std::vector<Node> nodes_;
  bool consumed_ = false;
  bool backward_done_ = false;
};

// counter-based dropout stream key
struct DropoutKey {
  uint64_t seed = 0;
  uint64_t layer = 0;
  uint64_t step = 0;
};

// --- primitives -------------------------------------------------------------

Tensor add(const Tensor & a, const Tensor & b);       // same shape | scalar | row vector
Tensor sub(const Tensor & a, const Tensor & b);       // same shape | scalar
Tensor mul(const Tensor & a, const Tensor & b);       // same shape | scalar
Tensor div(const Tensor & a, const Tensor & b);       // same shape | scalar
Tensor neg(const Tensor & a);
Tensor scale_const(const Tensor & a, double c);

Tensor matmul(const Tensor & a, const Tensor & b);
Tensor concat_cols(const std::vector<Tensor> & parts);
Tensor sum(const Tensor & a);
Tensor mean(const Tensor & a);

Tensor leaky_relu(const Tensor & a, double slope = 0.2);
Tensor elu(const Tensor & a, double alpha = 1.0);
Tensor sigmoid(const Tensor & a);
Tensor softplus(const Tensor & a);
Tensor exp(const Tensor & a);
Tensor log(const Tensor & a);
Tensor sqrt(const Tensor & a);
Tensor sin(const Tensor & a);
Tensor cos(const Tensor & a);

// Row-wise softmax with an exclusion mask (0 entries are forced to exactly 0
// probability and receive no gradient). Throws AllMaskedRow.
Tensor softmax_masked(const Tensor & a, const std::vector<uint8_t> & mask);

// Column-independent softmax over entries that share a segment id
// (typically: attention logits [E,H] grouped by destination node).
Tensor segment_softmax(const Tensor & logits, const std::vector<int> & segment, size_t num_segments);

Tensor gather_rows(const Tensor & a, const std::vector<int> & idx);
Tensor scatter_add_rows(const Tensor & a, const std::vector<int> & dst, size_t num_rows);

// Each row of `a` ([N,d]) multiplied elementwise by `v` ([d]).
Tensor mul_rowvec(const Tensor & a, const Tensor & v);
// Column-block scaling: a [N,d] with d = H*b, alpha [N,H]; block h of row n
// is scaled by alpha(n,h).
Tensor scale_blocks(const Tensor & a, const Tensor & alpha);
// Per-row sums of each column block: [N,d] -> [N,H] with d = H*b.
Tensor sum_col_blocks(const Tensor & a, size_t num_blocks);

Tensor layer_norm(const Tensor & a, const Tensor & gain, const Tensor & bias, double eps = 1e-5);
Tensor dropout(const Tensor & a, double rate, const DropoutKey & key, bool training);

// Mean over consecutive groups of `group` rows: [B*group, d] -> [B, d].
Tensor mean_pool_groups(const Tensor & a, size_t group);
Tensor max_pool_groups(const Tensor & a, size_t group);

Tensor slice_scalar(const Tensor & a, size_t row, size_t col);

// --- scalar view for the differentiable geometry ----------------------------

// Thin wrapper so the templated geometry kernels run unchanged on tape
// scalars; see leo::geom::value_of / scalar_like.
struct Sc {
  Tensor t;
};

inline Sc operator+(const Sc & a, const Sc & b) { return {add(a.t, b.t)}; }
inline Sc operator-(const Sc & a, const Sc & b) { return {sub(a.t, b.t)}; }
inline Sc operator*(const Sc & a, const Sc & b) { return {mul(a.t, b.t)}; }
inline Sc operator/(const Sc & a, const Sc & b) { return {div(a.t, b.t)}; }
inline Sc operator-(const Sc & a) { return {neg(a.t)}; }

inline Sc operator+(const Sc & a, double c) { return {add(a.t, a.t.tape->scalar(c))}; }
inline Sc operator+(double c, const Sc & a) { return a + c; }
inline Sc operator-(const Sc & a, double c) { return a + (-c); }
inline Sc operator-(double c, const Sc & a) { return {sub(a.t.tape->scalar(c), a.t)}; }
inline Sc operator*(const Sc & a, double c) { return {scale_const(a.t, c)}; }
inline Sc operator*(double c, const Sc & a) { return a * c; }
inline Sc operator/(const Sc & a, double c) { return {scale_const(a.t, 1.0 / c)}; }
inline Sc operator/(double c, const Sc & a) { return {div(a.t.tape->scalar(c), a.t)}; }

inline Sc sqrt(const Sc & a) { return {sqrt(a.t)}; }
inline Sc sin(const Sc & a) { return {sin(a.t)}; }
inline Sc cos(const Sc & a) { return {cos(a.t)}; }

inline double value_of(const Sc & a) { return a.t.value(); }
inline Sc scalar_like(const Sc & ref, double v) { return {ref.t.tape->scalar(v)}; }

}  // namespace leo::nn

#endif  // LEO_TENSOR_HPP_
