// Copyright (c) 2026 The cosg Authors
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

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "cosg/tensor.hpp"

namespace cosg {

class Graph;

/// Handle to a node of a Graph. Cheap to copy; only valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  std::uint32_t id = 0;

  const Tensor& value() const;
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Reverse-mode tape. Nodes are appended in construction order, which is a
/// topological order; backward() walks them in exact reverse.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, const Tensor& out_grad)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Leaf that receives a gradient (readable through grad()).
  Var variable(Tensor value);
  /// Leaf bound to a Parameter; backward() adds its gradient into p.grad.
  /// The value is read in place, so p.value must not change while this
  /// graph is in use.
  Var parameter(Parameter& p);

  const Tensor& value(Var v) const { return nodes_[v.id].val(); }
  /// Gradient of the last backward() target w.r.t. v; zeros when none flowed.
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  double item(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Seeds d(loss)/d(loss) = 1 and propagates to every node. `loss` must hold
  /// exactly one value.
  void backward(Var loss);

  /// Appends a node. `fn` is invoked during backward only when some input
  /// requires a gradient. Throws NumericError on non-finite output.
  Var record(const char* op, Tensor value, std::span<const Var> inputs, BackwardFn fn);
  Var record(const char* op, Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
    return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(fn));
  }

  /// Finite-difference support for grad_reverse. In capture mode every
  /// reversal node records its input. In reflect mode the k-th reversal node
  /// outputs 2 * base_k - x instead of x: equal in value at the base point,
  /// with derivative -1, i.e. the function whose true derivative the
  /// reversal backward reports.
  void capture_reversal_inputs() { capture_reversals_ = true; }
  std::vector<Tensor> take_reversal_inputs() { return std::move(reversal_inputs_); }
  void reflect_reversals(std::vector<Tensor> bases) { reflect_bases_ = std::move(bases); }
  Tensor reversal_forward(const Tensor& x);

  /// Mutable gradient accumulator of v, allocated on first use. Backward
  /// functions add into this.
  Tensor& grad_buffer(Var v);

 private:
  struct Node {
    Tensor value;
    const Tensor* bound = nullptr;  // parameter storage, used instead of value
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
    const char* op = "";

    const Tensor& val() const { return bound != nullptr ? *bound : value; }
  };

  Var push(Node node);

  // deque keeps node references valid while new nodes are appended.
  std::deque<Node> nodes_;
  bool capture_reversals_ = false;
  std::vector<Tensor> reversal_inputs_;
  std::vector<Tensor> reflect_bases_;
  std::size_t reversal_count_ = 0;
  Tensor empty_grad_;
};

inline const Tensor& Var::value() const { return graph->value(*this); }
inline const Tensor& Var::grad() const { return graph->grad(*this); }

// ---------------------------------------------------------------------------
// Primitives. All shapes are checked; mismatches raise DimensionError naming
// both operands.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
/// x (T x d) + b (d) broadcast over rows.
Var add_row(Var x, Var b);

Var matmul(Var a, Var b);
/// a * b^T.
Var matmul_nt(Var a, Var b);
Var transpose(Var a);
/// y[t] = x[t] W + b.
Var linear(Var x, Var w, Var b);

inline constexpr double kLeakySlope = 0.01;
Var leaky_relu(Var x, double slope = kLeakySlope);
Var sigmoid(Var x);
Var tanh(Var x);
Var square(Var x);
Var log(Var x);
/// Elementwise Huber: 0.5 r^2 for |r| <= delta, delta (|r| - 0.5 delta) otherwise.
Var huber(Var r, double delta = 1.0);

/// Identity forward; multiplies the incoming gradient by -1.
Var grad_reverse(Var x);

inline constexpr double kLayerNormEps = 1e-5;
Var layer_norm(Var x, Var gain, Var bias, double eps = kLayerNormEps);
Var softmax_rows(Var x);
/// Mean over rows of -log softmax(logits[t])[label].
Var cross_entropy_rows(Var logits, std::size_t label);
/// Mean over entries of the binary cross-entropy of probabilities `p`
/// against a constant target in {0, 1}; p is clamped to [clamp, 1 - clamp].
Var binary_cross_entropy(Var p, double target, double clamp = 1e-7);

Var sum(Var x);
Var mean(Var x);

Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var x, std::size_t begin, std::size_t count);
Var slice_cols(Var x, std::size_t begin, std::size_t count);
/// out[i] = x[indices[i]]; backward scatter-adds.
Var gather_rows(Var x, std::vector<std::size_t> indices);
/// Temporal im2col for 1-D convolution: x holds consecutive segments of
/// `segment` rows; each output row concatenates the `kernel` rows centred on
/// it, zero-padded at segment edges. Output is T x (kernel * d).
Var unfold_time(Var x, std::size_t kernel, std::size_t segment);
/// Gated recurrent unit over a whole sequence. `xp` holds the precomputed
/// input projections [r | z | n] in time-major rows (row t * windows + w),
/// `wh` is h x 3h and `bh` has 3h entries. With s = h_prev wh + bh:
///   r = sigmoid(xr + sr), z = sigmoid(xz + sz), n = tanh(xn + r * sn),
///   h = (1 - z) n + z h_prev, starting from zeros.
/// Returns every state in the row order of `xp`; `reverse` runs from the
/// last time step to the first.
Var gru_sequence(Var xp, Var wh, Var bh, std::size_t windows, bool reverse);

}  // namespace cosg
