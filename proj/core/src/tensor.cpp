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

#include "leo/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "leo/rng.hpp"

namespace leo::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

std::string shape_str(const Shape & s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

size_t count(const Shape & s) {
  size_t n = 1;
  for (size_t d : s) n *= d;
  return n;
}

void check_same_tape(const Tensor & a, const Tensor & b) {
  if (a.tape != b.tape) throw Error("tensors live on different tapes");
}

[[noreturn]] void shape_error(const char * op, const Shape & a, const Shape & b) {
  throw ShapeMismatch(std::string(op) + ": " + shape_str(a) + " vs " + shape_str(b));
}

}  // namespace

const Shape & Tensor::shape() const { return tape->node(id).shape; }
size_t Tensor::size() const { return tape->node(id).values.size(); }
size_t Tensor::rows() const {
  const Shape & s = shape();
  return s.empty() ? 1 : s[0];
}
size_t Tensor::cols() const {
  const Shape & s = shape();
  return s.size() < 2 ? 1 : s[1];
}
double Tensor::value() const {
  if (size() != 1) throw ShapeMismatch("value(): tensor is not scalar, shape " + shape_str(shape()));
  return tape->node(id).values[0];
}
std::span<const double> Tensor::values() const {
  const auto & v = tape->node(id).values;
  return {v.data(), v.size()};
}

Tensor Tape::leaf(Shape shape, std::vector<double> values, bool requires_grad) {
  if (count(shape) != values.size()) {
    throw ShapeMismatch("leaf: shape " + shape_str(shape) + " does not match " +
                        std::to_string(values.size()) + " values");
  }
  int id = emplace(std::move(shape), std::move(values), requires_grad, nullptr);
  return {this, id};
}

int Tape::emplace(Shape shape, std::vector<double> values, bool requires_grad, std::function<void(Tape &)> pb) {
  Node n;
  n.shape = std::move(shape);
  n.values = std::move(values);
  n.requires_grad = requires_grad;
  n.pullback = std::move(pb);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size() - 1);
}

void Tape::backward(const Tensor & loss) {
  if (consumed_) throw TapeConsumed("backward already ran on this tape");
  if (loss.tape != this) throw Error("loss lives on another tape");
  if (loss.size() != 1) throw NonScalarLoss("loss has shape " + shape_str(loss.shape()));
  consumed_ = true;
  for (auto & n : nodes_) n.grad.assign(n.values.size(), 0.0);
  nodes_[static_cast<size_t>(loss.id)].grad[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node & n = nodes_[static_cast<size_t>(i)];
    if (n.requires_grad && n.pullback) n.pullback(*this);
  }
  backward_done_ = true;
}

std::span<const double> Tape::grad(const Tensor & t) const {
  if (!backward_done_) throw Error("grad requested before backward");
  const auto & g = node(t.id).grad;
  return {g.data(), g.size()};
}

namespace {

// generic elementwise binary op with optional scalar/row broadcast on b
enum class Bcast { None, Scalar, Row };

template <class FwdFn, class BwdFn>
Tensor binary_op(const char * name, const Tensor & a, const Tensor & b, bool allow_row, FwdFn fwd, BwdFn bwd) {
  check_same_tape(a, b);
  Tape & tape = *a.tape;
  Bcast bc;
  if (a.shape() == b.shape()) {
    bc = Bcast::None;
  } else if (b.size() == 1) {
    bc = Bcast::Scalar;
  } else if (allow_row && b.shape().size() == 1 && a.cols() == b.size() && a.shape().size() == 2) {
    bc = Bcast::Row;
  } else {
    shape_error(name, a.shape(), b.shape());
  }
  const auto & av = tape.node(a.id).values;
  const auto & bv = tape.node(b.id).values;
  std::vector<double> out(av.size());
  size_t c = a.cols();
  for (size_t i = 0; i < av.size(); ++i) {
    double bi = bc == Bcast::None ? bv[i] : (bc == Bcast::Scalar ? bv[0] : bv[i % c]);
    out[i] = fwd(av[i], bi);
  }
  bool rg = tape.node(a.id).requires_grad || tape.node(b.id).requires_grad;
  int aid = a.id, bid = b.id;
  // emplace first so the closure can capture the output id
  int out_id = tape.emplace(a.shape(), std::move(out), rg, nullptr);
  tape.node(out_id).pullback = [aid, bid, out_id, bc, c, bwd](Tape & tp) {
    const auto & g = tp.node(out_id).grad;
    const auto & av2 = tp.node(aid).values;
    const auto & bv2 = tp.node(bid).values;
    auto & ga = tp.node(aid).grad;
    auto & gb = tp.node(bid).grad;
    bool need_a = tp.node(aid).requires_grad;
    bool need_b = tp.node(bid).requires_grad;
    for (size_t i = 0; i < g.size(); ++i) {
      size_t bi = bc == Bcast::None ? i : (bc == Bcast::Scalar ? 0 : i % c);
      auto [da, db] = bwd(av2[i], bv2[bi], g[i]);
      if (need_a) ga[i] += da;
      if (need_b) gb[bi] += db;
    }
  };
  return {&tape, out_id};
}

template <class FwdFn, class BwdFn>
Tensor unary_op(const Tensor & a, FwdFn fwd, BwdFn bwd) {
  Tape & tape = *a.tape;
  const auto & av = tape.node(a.id).values;
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
  bool rg = tape.node(a.id).requires_grad;
  int aid = a.id;
  int out_id = tape.emplace(a.shape(), std::move(out), rg, nullptr);
  if (rg) {
    tape.node(out_id).pullback = [aid, out_id, bwd](Tape & tp) {
      const auto & g = tp.node(out_id).grad;
      const auto & av2 = tp.node(aid).values;
      const auto & ov = tp.node(out_id).values;
      auto & ga = tp.node(aid).grad;
      for (size_t i = 0; i < g.size(); ++i) ga[i] += bwd(av2[i], ov[i]) * g[i];
    };
  }
  return {&tape, out_id};
}

}  // namespace

Tensor add(const Tensor & a, const Tensor & b) {
  return binary_op(
      "add", a, b, true, [](double x, double y) { return x + y; },
      [](double, double, double g) { return std::pair<double, double>{g, g}; });
}

Tensor sub(const Tensor & a, const Tensor & b) {
  return binary_op(
      "sub", a, b, false, [](double x, double y) { return x - y; },
      [](double, double, double g) { return std::pair<double, double>{g, -g}; });
}

Tensor mul(const Tensor & a, const Tensor & b) {
  return binary_op(
      "mul", a, b, false, [](double x, double y) { return x * y; },
      [](double x, double y, double g) { return std::pair<double, double>{g * y, g * x}; });
}

Tensor div(const Tensor & a, const Tensor & b) {
  return binary_op(
      "div", a, b, false, [](double x, double y) { return x / y; },
      [](double x, double y, double g) {
        return std::pair<double, double>{g / y, -g * x / (y * y)};
      });
}

Tensor neg(const Tensor & a) {
  return unary_op(
      a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor scale_const(const Tensor & a, double c) {
  return unary_op(
      a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Tensor matmul(const Tensor & a, const Tensor & b) {
  check_same_tape(a, b);
  Tape & tape = *a.tape;
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.cols() != b.rows()) {
    shape_error("matmul", a.shape(), b.shape());
  }
  size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n);
  {
    CMapMat A(tape.node(a.id).values.data(), m, k);
    CMapMat B(tape.node(b.id).values.data(), k, n);
    MapMat C(out.data(), m, n);
    C.noalias() = A * B;
  }
  bool rg = tape.node(a.id).requires_grad || tape.node(b.id).requires_grad;
  int aid = a.id, bid = b.id;
  int out_id = tape.emplace({m, n}, std::move(out), rg, nullptr);
  if (rg) {
    tape.node(out_id).pullback = [aid, bid, out_id, m, k, n](Tape & tp) {
      CMapMat G(tp.node(out_id).grad.data(), m, n);
      if (tp.node(aid).requires_grad) {
        CMapMat B(tp.node(bid).values.data(), k, n);
        MapMat GA(tp.node(aid).grad.data(), m, k);
        GA.noalias() += G * B.transpose();
      }
      if (tp.node(bid).requires_grad) {
        CMapMat A(tp.node(aid).values.data(), m, k);
        MapMat GB(tp.node(bid).grad.data(), k, n);
        GB.noalias() += A.transpose() * G;
      }
    };
  }
  return {&tape, out_id};
}

Tensor concat_cols(const std::vector<Tensor> & parts) {
  if (parts.empty()) throw Error("concat_cols: no inputs");
  Tape & tape = *parts[0].tape;
  size_t m = parts[0].rows();
  size_t total = 0;
  bool rg = false;
  for (const auto & p : parts) {
    check_same_tape(parts[0], p);
    if (p.rows() != m) shape_error("concat_cols", parts[0].shape(), p.shape());
    total += p.cols();
    rg = rg || tape.node(p.id).requires_grad;
  }
  std::vector<double> out(m * total);
  size_t off = 0;
  for (const auto & p : parts) {
    size_t c = p.cols();
    const auto & v = tape.node(p.id).values;
    for (size_t r = 0; r < m; ++r) {
      std::copy(v.begin() + r * c, v.begin() + (r + 1) * c, out.begin() + r * total + off);
    }
    off += c;
  }
  std::vector<int> ids;
  std::vector<size_t> widths;
  for (const auto & p : parts) {
    ids.push_back(p.id);
    widths.push_back(p.cols());
  }
  int out_id = tape.emplace({m, total}, std::move(out), rg, nullptr);
  if (rg) {
    tape.node(out_id).pullback = [ids, widths, out_id, m, total](Tape & tp) {
      const auto & g = tp.node(out_id).grad;
      size_t off2 = 0;
      for (size_t pi = 0; pi < ids.size(); ++pi) {
        size_t c = widths[pi];
        if (tp.node(ids[pi]).requires_grad) {
          auto & gp = tp.node(ids[pi]).grad;
          for (size_t r = 0; r < m; ++r) {
            for (size_t j = 0; j < c; ++j) gp[r * c + j] += g[r * total + off2 + j];
          }
        }
        off2 += c;
      }
    };
  }
  return {&tape, out_id};
}

namespace {

Tensor reduce_all(const Tensor & a, double scale) {
  Tape & tape = *a.tape;
  const auto & av = tape.node(a.id).values;
  double acc = 0.0;
  for (double v : av) acc += v;
  acc *= scale;
  bool rg = tape.node(a.id).requires_grad;
  int aid = a.id;
  int out_id = tape.emplace({1}, {acc}, rg, nullptr);
  if (rg) {
    tape.node(out_id).pullback = [aid, out_id, scale](Tape & tp) {
      double g = tp.node(out_id).grad[0] * scale;
      auto & ga = tp.node(aid).grad;
      for (auto & v : ga) v += g;
    };
  }
  return {&tape, out_id};
}

}  // namespace

Tensor sum(const Tensor & a) { return reduce_all(a, 1.0); }
Tensor mean(const Tensor & a) { return reduce_all(a, 1.0 / static_cast<double>(a.size())); }

Tensor leaky_relu(const Tensor & a, double slope) {
  return unary_op(
      a, [slope](double x) { return x >= 0.0 ? x : slope * x; },
      [slope](double x, double) { return x >= 0.0 ? 1.0 : slope; });
}

Tensor elu(const Tensor & a, double alpha) {
  return unary_op(
      a, [alpha](double x) { return x >= 0.0 ? x : alpha * (std::exp(x) - 1.0); },
      [alpha](double x, double y) { return x >= 0.0 ? 1.0 : y + alpha; });
}

Tensor sigmoid(const Tensor & a) {
  return unary_op(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(const Tensor & a) {
  return unary_op(
      a,
      [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); },
      [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Tensor exp(const Tensor & a) {
  return unary_op(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor & a) {
  return unary_op(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor & a) {
  return unary_op(
      a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Tensor sin(const Tensor & a) {
  return unary_op(
      a, [](double x) { return std::sin(x); }, [](double x, double) { return std::cos(x); });
}

Tensor cos(const Tensor & a) {
  return unary_op(
      a, [](double x) { return std::cos(x); }, [](double x, double) { return -std::sin(x); });
}

Tensor softmax_masked(const Tensor & a, const std::vector<uint8_t> & mask) {
  Tape & tape = *a.tape;
  if (mask.size() != a.size()) {
    throw ShapeMismatch("softmax_masked: mask size " + std::to_string(mask.size()) + " vs tensor " +
                        std::to_string(a.size()));
  }
  size_t r = a.rows(), c = a.cols();
  const auto & av = tape.node(a.id).values;
  std::vector<double> out(av.size(), 0.0);
  for (size_t i = 0; i < r; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < c; ++j) {
      if (mask[i * c + j]) mx = std::max(mx, av[i * c + j]);
    }
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw AllMaskedRow("row " + std::to_string(i) + " has no valid entry");
    }
    double z = 0.0;
    for (size_t j = 0; j < c; ++j) {
      if (mask[i * c + j]) z += std::exp(av[i * c + j] - mx);
    }
    for (size_t j = 0; j < c; ++j) {
      if (mask[i * c + j]) out[i * c + j] = std::exp(av[i * c + j] - mx) / z;
    }
  }
  bool rg = tape.node(a.id).requires_grad;
  int aid = a.id;
  int out_id = tape.emplace(a.shape(), std::move(out), rg, nullptr);
  if (rg) {
    auto m = mask;
    tape.node(out_id).pullback = [aid, out_id, r, c, m](Tape & tp) {
      const auto & g = tp.node(out_id).grad;
      const auto & y = tp.node(out_id).values;
      auto & ga = tp.node(aid).grad;
      for (size_t i = 0; i < r; ++i) {
        double dotv = 0.0;
        for (size_t j = 0; j < c; ++j) {
          if (m[i * c + j]) dotv += g[i * c + j] * y[i * c + j];
        }
        for (size_t j = 0; j < c; ++j) {
          if (m[i * c + j]) ga[i * c + j] += y[i * c + j] * (g[i * c + j] - dotv);
        }
      }
    };
  }
  return {&tape, out_id};
}

Tensor segment_softmax(const Tensor & logits, const std::vector<int> & segment, size_t num_segments) {
  Tape & tape = *logits.tape;
  size_t e = logits.rows(), h = logits.cols();
  if (segment.size() != e) {
    throw ShapeMismatch("segment_softmax: segment ids " + std::to_string(segment.size()) + " vs rows " +
                        std::to_string(e));
  }
  const auto & lv = tape.node(logits.id).values;
  std::vector<double> mx(num_segments * h, -std::numeric_limits<double>::infinity());
  for (size_t i = 0; i < e; ++i) {
    for (size_t j = 0; j < h; ++j) {
      auto s = static_cast<size_t>(segment[i]);
      mx[s * h + j] = std::max(mx[s * h + j], lv[i * h + j]);
    }
  }
  std::vector<double> z(num_segments * h, 0.0);
  std::vector<double> out(lv.size());
  for (size_t i = 0; i < e; ++i) {
    auto s = static_cast<size_t>(segment[i]);
    for (size_t j = 0; j < h; ++j) {
      out[i * h + j] = std::exp(lv[i * h + j] - mx[s * h + j]);
      z[s * h + j] += out[i * h + j];
    }
  }
  for (size_t i = 0; i < e; ++i) {
    auto s = static_cast<size_t>(segment[i]);
    for (size_t j = 0; j < h; ++j) out[i * h + j] /= z[s * h + j];
  }
  bool rg = tape.node(logits.id).requires_grad;
  int aid = logits.id;
  int out_id = tape.emplace(logits.shape(), std::move(out), rg, nullptr);
  if (rg) {
    auto seg = segment;
    tape.node(out_id).pullback = [aid, out_id, e, h, seg, num_segments](Tape & tp) {
      const auto & g = tp.node(out_id).grad;
      const auto & y = tp.node(out_id).values;
      auto & ga = tp.node(aid).grad;
      std::vector<double> dots(num_segments * h, 0.0);
      for (size_t i = 0; i < e; ++i) {
        auto s = static_cast<size_t>(seg[i]);
        for (size_t j = 0; j < h; ++j) dots[s * h + j] += g[i * h + j] * y[i * h + j];
      }
      for (size_t i = 0; i < e; ++i) {
        auto s = static_cast<size_t>(seg[i]);
        for (size_t j = 0; j < h; ++j) {
          ga[i * h + j] += y[i * h + j] * (g[i * h + j] - dots[s * h + j]);
        }
      }
    };
  }
  return {&tape, out_id};
}

Tensor gather_rows(const Tensor & a, const std::vector<int> & idx) {
  Tape & tape = *a.tape;
  size_t c = a.cols();
  size_t n = a.rows();
  const auto & av = tape.node(a.id).values;
  std::vector<double> out(idx.size() * c);
  for (size_t i = 0; i < idx.size(); ++i) {
    auto r = static_cast<size_t>(idx[i]);
    if (r >= n) throw Error("gather_rows: index out of range");
    std::copy(av.begin() + r * c, av.begin() + (r + 1) * c, out.begin() + i * c);
  }
  Shape shape = a.shape().size() == 2 ? Shape{idx.size(), c} : Shape{idx.size()};
  bool rg = tape.node(a.id).requires_grad;
  int aid = a.id;
  int out_id = tape.emplace(std::move(shape), std::move(out), rg, nullptr);
  if (rg) {
    auto ix = idx;
    tape.node(out_id).pullback = [aid, out_id, ix, c](Tape & tp) {
      const auto & g = tp.node(out_id).grad;
      auto & ga = tp.node(aid).grad;
      for (size_t i = 0; i < ix.size(); ++i) {
        auto r = static_cast<size_t>(ix[i]);
        for (size_t j = 0; j < c; ++j) ga[r * c + j] += g[i * c + j];
      }
    };
  }
  return {&tape, out_id};
}

Tensor scatter_add_rows(const Tensor & a, const std::vector<int> & dst, size_t num_rows) {
  Tape & tape = *a.tape;
  size_t c = a.cols();
  if (dst.size() != a.rows()) {
    throw ShapeMismatch("scatter_add_rows: dst ids " + std::to_string(dst.size()) + " vs rows " +
                        std::to_string(a.rows()));
  }
  const auto & av = tape.node(a.id).values;
  std::vector<double> out(num_rows * c, 0.0);
  for (size_t i = 0; i < dst.size(); ++i) {
    auto r = static_cast<size_t>(dst[i]);
    if (r >= num_rows) throw Error("scatter_add_rows: index out of range");
    for (size_t j = 0; j < c; ++j) out[r * c + j] += av[i * c + j];
  }
  Shape shape = a.shape().size() == 2 ? Shape{num_rows, c} : Shape{num_rows};
  bool rg = tape.node(a.id).requires_grad;
  int aid = a.id;
  int out_id = tape.emplace(std::move(shape), std::move(out), rg, nullptr);
  if (rg) {
    auto ix = dst;
    tape.node(out_id).pullback = [aid, out_id, ix, c](Tape & tp) {
      const auto & g = tp.node(out_id).grad;
      auto & ga = tp.node(aid).grad;
      for (size_t i = 0; i < ix.size(); ++i) {
        auto r = static_cast<size_t>(ix[i]);
        for (size_t j = 0; j < c; ++j) ga[i * c + j] += g[r * c + j];
      }
    };
  }
  return {&tape, out_id};
}

Tensor mul_rowvec(const Tensor & a, const Tensor & v) {
  check_same_tape(a, v);
  Tape & tape = *a.tape;
  size_t c = a.cols();
  if (v.size() != c) shape_error("mul_rowvec", a.shape(), v.shape());
  const auto & av = tape.node(a.id).values;
  const auto & vv = tape.node(v.id).values;
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] * vv[i % c];
  bool rg = tape.node(a.id).requires_grad || tape.node(v.id).requires_grad;
  int aid = a.id, vid = v.id;
  int out_id = tape.emplace(a.shape(), std::move(out), rg, nullptr);
  if (rg) {
    tape.node(out_id).pullback = [aid, vid, out_id, c](Tape & tp) {
      const auto & g = tp.node(out_id).grad;
      const auto & av2 = tp.node(aid).values;
      const auto & vv2 = tp.node(vid).values;
      if (tp.node(aid).requires_grad) {
        auto & ga = tp.node(aid).grad;
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vv2[i % c];
      }
      if (tp.node(vid).requires_grad) {
        auto & gv = tp.node(vid).grad;
        for (size_t i = 0; i < g.size(); ++i) gv[i % c] += g[i] * av2[i];
      }
    };
  }
  return {&tape, out_id};
}

Tensor scale_blocks(const Tensor & a, const Tensor & alpha) {
  check_same_tape(a, alpha);
  Tape & tape = *a.tape;
  size_t n = a.rows(), d = a.cols(), h = alpha.cols();
  if (alpha.rows() != n || h == 0 || d % h != 0) shape_error("scale_blocks", a.shape(), alpha.shape());
  size_t b = d / h;
  const auto & av = tape.node(a.id).values;
  const auto & cv = tape.node(alpha.id).values;
  std::vector<double> out(av.size());
  for (size_t r = 0; r < n; ++r) {
    for (size_t j = 0; j < d; ++j) out[r * d + j] = av[r * d + j] * cv[r * h + j / b];
  }
  bool rg = tape.node(a.id).requires_grad || tape.node(alpha.id).requires_grad;
  int aid = a.id, cid = alpha.id;
  int out_id = tape.emplace(a.shape(), std::move(out), rg, nullptr);
  if (rg) {
    tape.node(out_id).pullback = [aid, cid, out_id, n, d, h, b](Tape & tp) {
      const auto & g = tp.node(out_id).grad;
      const auto & av2 = tp.node(aid).values;
      const auto & cv2 = tp.node(cid).values;
      if (tp.node(aid).requires_grad) {
        auto & ga = tp.node(aid).grad;
        for (size_t r = 0; r < n; ++r) {
          for (size_t j = 0; j < d; ++j) ga[r * d + j] += g[r * d + j] * cv2[r * h + j / b];
        }
      }
      if (tp.node(cid).requires_grad) {
        auto & gc = tp.node(cid).grad;
        for (size_t r = 0; r < n; ++r) {
          for (size_t j = 0; j < d; ++j) gc[r * h + j / b] += g[r * d + j] * av2[r * d + j];
        }
      }
    };
  }
  return {&tape, out_id};
}

Tensor sum_col_blocks(const Tensor & a, size_t num_blocks) {
  Tape & tape = *a.tape;
  size_t n = a.rows(), d = a.cols();
  if (num_blocks == 0 || d % num_blocks != 0) {
    throw ShapeMismatch("sum_col_blocks: " + std::to_string(num_blocks) + " blocks over " +
                        std::to_string(d) + " cols");
  }
  size_t b = d / num_blocks;
  const auto & av = tape.node(a.id).values;
  std::vector<double> out(n * num_blocks, 0.0);
  for (size_t r = 0; r < n; ++r) {
    for (size_t j = 0; j < d; ++j) out[r * num_blocks + j / b] += av[r * d + j];
  }
  bool rg = tape.node(a.id).requires_grad;
  int aid = a.id;
  int out_id = tape.emplace({n, num_blocks}, std::move(out), rg, nullptr);
  if (rg) {
    tape.node(out_id).pullback = [aid, out_id, n, d, b, num_blocks](Tape & tp) {
      const auto & g = tp.node(out_id).grad;
      auto & ga = tp.node(aid).grad;
      for (size_t r = 0; r < n; ++r) {
        for (size_t j = 0; j < d; ++j) ga[r * d + j] += g[r * num_blocks + j / b];
      }
    };
  }
  return {&tape, out_id};
}

Tensor layer_norm(const Tensor & a, const Tensor & gain, const Tensor & bias, double eps) {
  check_same_tape(a, gain);
  check_same_tape(a, bias);
  Tape & tape = *a.tape;
  size_t n = a.rows(), d = a.cols();
  if (gain.size() != d || bias.size() != d) shape_error("layer_norm", a.shape(), gain.shape());
  const auto & av = tape.node(a.id).values;
  const auto & gv = tape.node(gain.id).values;
  const auto & bv = tape.node(bias.id).values;
  std::vector<double> out(av.size());
  std::vector<double> xhat(av.size());
  std::vector<double> inv_std(n);
  for (size_t r = 0; r < n; ++r) {
    double mu = 0.0;
    for (size_t j = 0; j < d; ++j) mu += av[r * d + j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (size_t j = 0; j < d; ++j) {
      double dlt = av[r * d + j] - mu;
      var += dlt * dlt;
    }
    var /= static_cast<double>(d);
    double istd = 1.0 / std::sqrt(var + eps);
    inv_std[r] = istd;
    for (size_t j = 0; j < d; ++j) {
      double xh = (av[r * d + j] - mu) * istd;
      xhat[r * d + j] = xh;
      out[r * d + j] = gv[j] * xh + bv[j];
    }
  }
  bool rg = tape.node(a.id).requires_grad || tape.node(gain.id).requires_grad ||
            tape.node(bias.id).requires_grad;
  int aid = a.id, gid = gain.id, bid = bias.id;
  int out_id = tape.emplace(a.shape(), std::move(out), rg, nullptr);
  if (rg) {
    tape.node(out_id).pullback = [aid, gid, bid, out_id, n, d, xhat, inv_std](Tape & tp) {
      const auto & g = tp.node(out_id).grad;
      const auto & gv2 = tp.node(gid).values;
      if (tp.node(gid).requires_grad) {
        auto & gg = tp.node(gid).grad;
        for (size_t r = 0; r < n; ++r) {
          for (size_t j = 0; j < d; ++j) gg[j] += g[r * d + j] * xhat[r * d + j];
        }
      }
      if (tp.node(bid).requires_grad) {
        auto & gb = tp.node(bid).grad;
        for (size_t r = 0; r < n; ++r) {
          for (size_t j = 0; j < d; ++j) gb[j] += g[r * d + j];
        }
      }
      if (tp.node(aid).requires_grad) {
        auto & ga = tp.node(aid).grad;
        for (size_t r = 0; r < n; ++r) {
          double mean_gy = 0.0, mean_gyx = 0.0;
          for (size_t j = 0; j < d; ++j) {
            double gy = g[r * d + j] * gv2[j];
            mean_gy += gy;
            mean_gyx += gy * xhat[r * d + j];
          }
          mean_gy /= static_cast<double>(d);
          mean_gyx /= static_cast<double>(d);
          for (size_t j = 0; j < d; ++j) {
            double gy = g[r * d + j] * gv2[j];
            ga[r * d + j] += (gy - mean_gy - xhat[r * d + j] * mean_gyx) * inv_std[r];
          }
        }
      }
    };
  }
  return {&tape, out_id};
}

Tensor dropout(const Tensor & a, double rate, const DropoutKey & key, bool training) {
  if (!training || rate <= 0.0) {
    // evaluation mode is the identity
    return unary_op(
        a, [](double x) { return x; }, [](double, double) { return 1.0; });
  }
  Tape & tape = *a.tape;
  const auto & av = tape.node(a.id).values;
  std::vector<double> out(av.size());
  std::vector<uint8_t> keep(av.size());
  double inv_keep = 1.0 / (1.0 - rate);
  for (size_t i = 0; i < av.size(); ++i) {
    keep[i] = uniform_counter(key.seed, key.layer, key.step, 0x6d0u, i) >= rate ? 1 : 0;
    out[i] = keep[i] ? av[i] * inv_keep : 0.0;
  }
  bool rg = tape.node(a.id).requires_grad;
  int aid = a.id;
  int out_id = tape.emplace(a.shape(), std::move(out), rg, nullptr);
  if (rg) {
    tape.node(out_id).pullback = [aid, out_id, keep, inv_keep](Tape & tp) {
      const auto & g = tp.node(out_id).grad;
      auto & ga = tp.node(aid).grad;
      for (size_t i = 0; i < g.size(); ++i) {
        if (keep[i]) ga[i] += g[i] * inv_keep;
      }
    };
  }
  return {&tape, out_id};
}

namespace {

Tensor pool_groups(const Tensor & a, size_t group, bool use_max) {
  Tape & tape = *a.tape;
  size_t n = a.rows(), d = a.cols();
  if (group == 0 || n % group != 0) {
    throw ShapeMismatch("pool_groups: " + std::to_string(n) + " rows not divisible by group " +
                        std::to_string(group));
  }
  size_t b = n / group;
  const auto & av = tape.node(a.id).values;
  std::vector<double> out(b * d, use_max ? -std::numeric_limits<double>::infinity() : 0.0);
  std::vector<int> argmax(use_max ? b * d : 0, 0);
  for (size_t r = 0; r < n; ++r) {
    size_t gidx = r / group;
    for (size_t j = 0; j < d; ++j) {
      if (use_max) {
        if (av[r * d + j] > out[gidx * d + j]) {
          out[gidx * d + j] = av[r * d + j];
          argmax[gidx * d + j] = static_cast<int>(r);
        }
      } else {
        out[gidx * d + j] += av[r * d + j];
      }
    }
  }
  if (!use_max) {
    for (auto & v : out) v /= static_cast<double>(group);
  }
  bool rg = tape.node(a.id).requires_grad;
  int aid = a.id;
  int out_id = tape.emplace({b, d}, std::move(out), rg, nullptr);
  if (rg) {
    tape.node(out_id).pullback = [aid, out_id, n, d, group, b, use_max, argmax](Tape & tp) {
      const auto & g = tp.node(out_id).grad;
      auto & ga = tp.node(aid).grad;
      if (use_max) {
        for (size_t i = 0; i < b * d; ++i) {
          ga[static_cast<size_t>(argmax[i]) * d + i % d] += g[i];
        }
      } else {
        double inv = 1.0 / static_cast<double>(group);
        for (size_t r = 0; r < n; ++r) {
          size_t gidx = r / group;
          for (size_t j = 0; j < d; ++j) ga[r * d + j] += g[gidx * d + j] * inv;
        }
      }
    };
  }
  return {&tape, out_id};
}

}  // namespace

Tensor mean_pool_groups(const Tensor & a, size_t group) { return pool_groups(a, group, false); }
Tensor max_pool_groups(const Tensor & a, size_t group) { return pool_groups(a, group, true); }

Tensor slice_scalar(const Tensor & a, size_t row, size_t col) {
  Tape & tape = *a.tape;
  size_t c = a.cols();
  if (row >= a.rows() || col >= c) {
    throw ShapeMismatch("slice_scalar: (" + std::to_string(row) + "," + std::to_string(col) +
                        ") out of " + shape_str(a.shape()));
  }
  size_t flat = row * c + col;
  const auto & av = tape.node(a.id).values;
  bool rg = tape.node(a.id).requires_grad;
  int aid = a.id;
  int out_id = tape.emplace({1}, {av[flat]}, rg, nullptr);
  if (rg) {
    tape.node(out_id).pullback = [aid, out_id, flat](Tape & tp) {
      tp.node(aid).grad[flat] += tp.node(out_id).grad[0];
    };
  }
  return {&tape, out_id};
}

}  // namespace leo::nn
