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

#include "cosg/graph.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "cosg/errors.hpp"

namespace cosg {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

Eigen::Map<const Eigen::RowVectorXd> as_row(const Tensor& t) {
  return Eigen::Map<const Eigen::RowVectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
}
Eigen::Map<Eigen::RowVectorXd> as_row(Tensor& t) {
  return Eigen::Map<Eigen::RowVectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
}

ConstMap as_mat(const Tensor& t) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}
MutMap as_mat(Tensor& t) {
  return MutMap(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

void require_rank2(Var v, const char* op) {
  if (v.value().rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " +
                         shape_string(v.shape()));
  }
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

Graph& graph_of(Var a) { return *a.graph; }

void accumulate(Graph& g, Var v, const Tensor& delta, double factor = 1.0) {
  if (!g.requires_grad(v)) return;
  Tensor& buf = g.grad_buffer(v);
  double* dst = buf.data();
  const double* src = delta.data();
  for (std::size_t i = 0; i < buf.size(); ++i) dst[i] += factor * src[i];
}

// Elementwise op with derivative expressed through the input value.
template <typename F, typename D>
Var unary(const char* op, Var x, F f, D dfdx) {
  const Tensor& xv = x.value();
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = f(xv[i]);
  return graph_of(x).record(op, std::move(y), {x}, [x, dfdx](Graph& g, const Tensor& gy) {
    const Tensor& xv = g.value(x);
    Tensor& gx = g.grad_buffer(x);
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += gy[i] * dfdx(xv[i]);
  });
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------------------
// Graph

Var Graph::push(Node node) {
  if (!node.val().all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + node.op);
  }
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.op = "constant";
  return push(std::move(n));
}

Var Graph::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  n.op = "variable";
  return push(std::move(n));
}

Var Graph::parameter(Parameter& p) {
  Node n;
  n.bound = &p.value;
  n.requires_grad = true;
  n.param = &p;
  n.op = "parameter";
  return push(std::move(n));
}

const Tensor& Graph::grad(Var v) const {
  const Node& n = nodes_[v.id];
  return n.grad.empty() && !n.val().empty() ? empty_grad_ : n.grad;
}

double Graph::item(Var v) const {
  const Tensor& t = nodes_[v.id].val();
  if (t.size() != 1) throw DimensionError("item() on non-scalar " + shape_string(t.shape()));
  return t[0];
}

Tensor Graph::reversal_forward(const Tensor& x) {
  const std::size_t k = reversal_count_++;
  if (capture_reversals_) reversal_inputs_.push_back(x);
  if (k < reflect_bases_.size()) {
    const Tensor& base = reflect_bases_[k];
    if (!base.same_shape(x)) throw DimensionError("grad_reverse: reflect base shape changed");
    Tensor y(x.shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = 2.0 * base[i] - x[i];
    return y;
  }
  return x;
}

Tensor& Graph::grad_buffer(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.empty() && !n.val().empty()) n.grad = Tensor(n.val().shape());
  return n.grad;
}

Var Graph::record(const char* op, Tensor value, std::span<const Var> inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  n.op = op;
  for (Var in : inputs) {
    if (in.graph != this) throw Error(std::string(op) + ": operand from another graph", 1);
    n.requires_grad = n.requires_grad || nodes_[in.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(fn);
  return push(std::move(n));
}

void Graph::backward(Var loss) {
  if (nodes_[loss.id].val().size() != 1) {
    throw DimensionError("backward() needs a scalar loss, got " +
                         shape_string(nodes_[loss.id].val().shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor();
  if (!nodes_[loss.id].requires_grad) return;
  grad_buffer(loss)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, n.grad);
  }
  for (auto& n : nodes_) {
    if (n.param == nullptr || n.grad.empty()) continue;
    if (!n.grad.all_finite()) {
      throw NumericError("non-finite gradient for parameter " + n.param->name);
    }
    double* dst = n.param->grad.data();
    for (std::size_t k = 0; k < n.grad.size(); ++k) dst[k] += n.grad[k];
  }
}

// ---------------------------------------------------------------------------
// Arithmetic

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.value()[i];
  return graph_of(a).record("add", std::move(y), {a, b}, [a, b](Graph& g, const Tensor& gy) {
    accumulate(g, a, gy);
    accumulate(g, b, gy);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= b.value()[i];
  return graph_of(a).record("sub", std::move(y), {a, b}, [a, b](Graph& g, const Tensor& gy) {
    accumulate(g, a, gy);
    accumulate(g, b, gy, -1.0);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b.value()[i];
  return graph_of(a).record("mul", std::move(y), {a, b}, [a, b](Graph& g, const Tensor& gy) {
    if (g.requires_grad(a)) {
      Tensor& ga = g.grad_buffer(a);
      const Tensor& bv = g.value(b);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] * bv[i];
    }
    if (g.requires_grad(b)) {
      Tensor& gb = g.grad_buffer(b);
      const Tensor& av = g.value(a);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  Tensor y = a.value();
  for (auto& v : y.values()) v *= s;
  return graph_of(a).record("scale", std::move(y), {a},
                            [a, s](Graph& g, const Tensor& gy) { accumulate(g, a, gy, s); });
}

Var add_scalar(Var a, double s) {
  Tensor y = a.value();
  for (auto& v : y.values()) v += s;
  return graph_of(a).record("add_scalar", std::move(y), {a},
                            [a](Graph& g, const Tensor& gy) { accumulate(g, a, gy); });
}

Var add_row(Var x, Var b) {
  require_rank2(x, "add_row");
  const std::size_t d = x.cols();
  if (b.value().size() != d) {
    throw DimensionError("add_row: " + shape_string(x.shape()) + " vs bias " +
                         shape_string(b.shape()));
  }
  Tensor y = x.value();
  as_mat(y).rowwise() += as_row(b.value());
  return graph_of(x).record("add_row", std::move(y), {x, b}, [x, b](Graph& g, const Tensor& gy) {
    accumulate(g, x, gy);
    if (g.requires_grad(b)) {
      Tensor& gb = g.grad_buffer(b);
      const std::size_t d = gb.size();
      for (std::size_t r = 0; r < gy.rows(); ++r)
        for (std::size_t c = 0; c < d; ++c) gb[c] += gy[r * d + c];
    }
  });
}

// ---------------------------------------------------------------------------
// Matrix products

Var matmul(Var a, Var b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
  Tensor y(a.rows(), b.cols());
  as_mat(y).noalias() = as_mat(a.value()) * as_mat(b.value());
  return graph_of(a).record("matmul", std::move(y), {a, b}, [a, b](Graph& g, const Tensor& gy) {
    if (g.requires_grad(a))
      as_mat(g.grad_buffer(a)).noalias() += as_mat(gy) * as_mat(g.value(b)).transpose();
    if (g.requires_grad(b))
      as_mat(g.grad_buffer(b)).noalias() += as_mat(g.value(a)).transpose() * as_mat(gy);
  });
}

Var matmul_nt(Var a, Var b) {
  require_rank2(a, "matmul_nt");
  require_rank2(b, "matmul_nt");
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: inner dimensions differ, " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
  Tensor y(a.rows(), b.rows());
  as_mat(y).noalias() = as_mat(a.value()) * as_mat(b.value()).transpose();
  return graph_of(a).record("matmul_nt", std::move(y), {a, b}, [a, b](Graph& g, const Tensor& gy) {
    if (g.requires_grad(a)) as_mat(g.grad_buffer(a)).noalias() += as_mat(gy) * as_mat(g.value(b));
    if (g.requires_grad(b))
      as_mat(g.grad_buffer(b)).noalias() += as_mat(gy).transpose() * as_mat(g.value(a));
  });
}

Var transpose(Var a) {
  require_rank2(a, "transpose");
  Tensor y(a.cols(), a.rows());
  as_mat(y) = as_mat(a.value()).transpose();
  return graph_of(a).record("transpose", std::move(y), {a}, [a](Graph& g, const Tensor& gy) {
    if (g.requires_grad(a)) as_mat(g.grad_buffer(a)) += as_mat(gy).transpose();
  });
}

Var linear(Var x, Var w, Var b) {
  require_rank2(x, "linear");
  require_rank2(w, "linear");
  if (x.cols() != w.rows()) {
    throw DimensionError("linear: input " + shape_string(x.shape()) + " does not match weight " +
                         shape_string(w.shape()));
  }
  if (b.value().size() != w.cols()) {
    throw DimensionError("linear: weight " + shape_string(w.shape()) + " does not match bias " +
                         shape_string(b.shape()));
  }
  Tensor y(x.rows(), w.cols());
  auto ym = as_mat(y);
  ym.noalias() = as_mat(x.value()) * as_mat(w.value());
  ym.rowwise() += as_row(b.value());
  return graph_of(x).record("linear", std::move(y), {x, w, b},
                            [x, w, b](Graph& g, const Tensor& gy) {
    const auto gm = as_mat(gy);
    if (g.requires_grad(x))
      as_mat(g.grad_buffer(x)).noalias() += gm * as_mat(g.value(w)).transpose();
    if (g.requires_grad(w))
      as_mat(g.grad_buffer(w)).noalias() += as_mat(g.value(x)).transpose() * gm;
    if (g.requires_grad(b)) {
      as_row(g.grad_buffer(b)) += gm.colwise().sum();
    }
  });
}

// ---------------------------------------------------------------------------
// Activations

Var leaky_relu(Var x, double slope) {
  return unary(
      "leaky_relu", x, [slope](double v) { return v >= 0 ? v : slope * v; },
      [slope](double v) { return v >= 0 ? 1.0 : slope; });
}

Var sigmoid(Var x) {
  return unary("sigmoid", x, sigmoid_scalar, [](double v) {
    const double s = sigmoid_scalar(v);
    return s * (1.0 - s);
  });
}

Var tanh(Var x) {
  return unary(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double v) {
        const double t = std::tanh(v);
        return 1.0 - t * t;
      });
}

Var square(Var x) {
  return unary(
      "square", x, [](double v) { return v * v; }, [](double v) { return 2.0 * v; });
}

Var log(Var x) {
  return unary(
      "log", x, [](double v) { return std::log(v); }, [](double v) { return 1.0 / v; });
}

Var huber(Var r, double delta) {
  return unary(
      "huber", r,
      [delta](double v) {
        const double a = std::abs(v);
        return a <= delta ? 0.5 * v * v : delta * (a - 0.5 * delta);
      },
      [delta](double v) { return std::abs(v) <= delta ? v : (v > 0 ? delta : -delta); });
}

Var grad_reverse(Var x) {
  Tensor y = graph_of(x).reversal_forward(x.value());
  return graph_of(x).record("grad_reverse", std::move(y), {x},
                            [x](Graph& g, const Tensor& gy) { accumulate(g, x, gy, -1.0); });
}

// ---------------------------------------------------------------------------
// Normalisation and softmax

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  require_rank2(x, "layer_norm");
  const std::size_t d = x.cols();
  if (gain.value().size() != d || bias.value().size() != d) {
    throw DimensionError("layer_norm: input " + shape_string(x.shape()) + " vs gain " +
                         shape_string(gain.shape()) + " / bias " + shape_string(bias.shape()));
  }
  if (!(eps > 0)) throw ConfigError("layer_norm: eps must be positive");
  const Tensor& xv = x.value();
  const std::size_t rows = xv.rows();
  Tensor y(xv.shape());
  // Per-row statistics; kept for the backward pass.
  auto stats = std::make_shared<std::vector<double>>(2 * rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data() + r * d;
    double mu = 0.0;
    for (std::size_t c = 0; c < d; ++c) mu += in[c];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (in[c] - mu) * (in[c] - mu);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*stats)[2 * r] = mu;
    (*stats)[2 * r + 1] = inv;
    double* out = y.data() + r * d;
    for (std::size_t c = 0; c < d; ++c)
      out[c] = (in[c] - mu) * inv * gain.value()[c] + bias.value()[c];
  }
  return graph_of(x).record(
      "layer_norm", std::move(y), {x, gain, bias}, [x, gain, bias, stats](Graph& g, const Tensor& gy) {
        const Tensor& xv = g.value(x);
        const Tensor& gv = g.value(gain);
        const std::size_t d = xv.cols();
        const bool need_x = g.requires_grad(x);
        const bool need_gain = g.requires_grad(gain);
        const bool need_bias = g.requires_grad(bias);
        std::vector<double> xhat(d), dxhat(d);
        for (std::size_t r = 0; r < xv.rows(); ++r) {
          const double mu = (*stats)[2 * r];
          const double inv = (*stats)[2 * r + 1];
          const double* in = xv.data() + r * d;
          const double* go = gy.data() + r * d;
          double mean_d = 0.0, mean_dx = 0.0;
          for (std::size_t c = 0; c < d; ++c) {
            xhat[c] = (in[c] - mu) * inv;
            dxhat[c] = go[c] * gv[c];
            mean_d += dxhat[c];
            mean_dx += dxhat[c] * xhat[c];
          }
          mean_d /= static_cast<double>(d);
          mean_dx /= static_cast<double>(d);
          if (need_x) {
            double* gx = g.grad_buffer(x).data() + r * d;
            for (std::size_t c = 0; c < d; ++c)
              gx[c] += inv * (dxhat[c] - mean_d - xhat[c] * mean_dx);
          }
          if (need_gain) {
            Tensor& gg = g.grad_buffer(gain);
            for (std::size_t c = 0; c < d; ++c) gg[c] += go[c] * xhat[c];
          }
          if (need_bias) {
            Tensor& gb = g.grad_buffer(bias);
            for (std::size_t c = 0; c < d; ++c) gb[c] += go[c];
          }
        }
      });
}

Var softmax_rows(Var x) {
  require_rank2(x, "softmax_rows");
  const Tensor& xv = x.value();
  const std::size_t d = xv.cols();
  Tensor y(xv.shape());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    const double* in = xv.data() + r * d;
    double* out = y.data() + r * d;
    const double m = *std::max_element(in, in + d);
    double z = 0.0;
    for (std::size_t c = 0; c < d; ++c) z += (out[c] = std::exp(in[c] - m));
    for (std::size_t c = 0; c < d; ++c) out[c] /= z;
  }
  auto probs = std::make_shared<Tensor>(y);
  return graph_of(x).record("softmax_rows", std::move(y), {x}, [x, probs](Graph& g, const Tensor& gy) {
    const std::size_t d = probs->cols();
    Tensor& gx = g.grad_buffer(x);
    for (std::size_t r = 0; r < probs->rows(); ++r) {
      const double* p = probs->data() + r * d;
      const double* go = gy.data() + r * d;
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += go[c] * p[c];
      double* out = gx.data() + r * d;
      for (std::size_t c = 0; c < d; ++c) out[c] += p[c] * (go[c] - dot);
    }
  });
}

Var cross_entropy_rows(Var logits, std::size_t label) {
  require_rank2(logits, "cross_entropy_rows");
  const Tensor& z = logits.value();
  const std::size_t d = z.cols();
  if (label >= d) {
    throw DimensionError("cross_entropy_rows: label " + std::to_string(label) + " for " +
                         std::to_string(d) + " classes");
  }
  const std::size_t n = z.rows();
  auto probs = std::make_shared<Tensor>(z.shape());
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double* in = z.data() + r * d;
    double* p = probs->data() + r * d;
    const double m = *std::max_element(in, in + d);
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += (p[c] = std::exp(in[c] - m));
    for (std::size_t c = 0; c < d; ++c) p[c] /= s;
    loss += (m + std::log(s)) - in[label];
  }
  loss /= static_cast<double>(n);
  return graph_of(logits).record(
      "cross_entropy_rows", Tensor::scalar(loss), {logits},
      [logits, probs, label](Graph& g, const Tensor& gy) {
        const std::size_t d = probs->cols();
        const double f = gy[0] / static_cast<double>(probs->rows());
        Tensor& gz = g.grad_buffer(logits);
        for (std::size_t r = 0; r < probs->rows(); ++r)
          for (std::size_t c = 0; c < d; ++c)
            gz[r * d + c] += f * ((*probs)[r * d + c] - (c == label ? 1.0 : 0.0));
      });
}

Var binary_cross_entropy(Var p, double target, double clamp) {
  const Tensor& pv = p.value();
  const double lo = clamp, hi = 1.0 - clamp;
  double loss = 0.0;
  for (double v : pv.values()) {
    const double q = std::clamp(v, lo, hi);
    loss -= target * std::log(q) + (1.0 - target) * std::log(1.0 - q);
  }
  loss /= static_cast<double>(pv.size());
  return graph_of(p).record("binary_cross_entropy", Tensor::scalar(loss), {p},
                            [p, target, lo, hi](Graph& g, const Tensor& gy) {
    const Tensor& pv = g.value(p);
    Tensor& gp = g.grad_buffer(p);
    const double f = gy[0] / static_cast<double>(pv.size());
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double v = pv[i];
      if (v < lo || v > hi) continue;
      gp[i] += f * (-(target / v) + (1.0 - target) / (1.0 - v));
    }
  });
}

// ---------------------------------------------------------------------------
// Reductions and reshaping

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return graph_of(x).record("sum", Tensor::scalar(s), {x}, [x](Graph& g, const Tensor& gy) {
    for (auto& v : g.grad_buffer(x).values()) v += gy[0];
  });
}

Var mean(Var x) {
  const double n = static_cast<double>(x.value().size());
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return graph_of(x).record("mean", Tensor::scalar(s / n), {x}, [x, n](Graph& g, const Tensor& gy) {
    for (auto& v : g.grad_buffer(x).values()) v += gy[0] / n;
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no operands");
  std::vector<Tensor> values;
  values.reserve(parts.size());
  for (Var v : parts) {
    require_rank2(v, "concat_rows");
    values.push_back(v.value());
  }
  Tensor y = cosg::concat_rows(values);
  std::vector<Var> inputs(parts.begin(), parts.end());
  return graph_of(parts.front()).record("concat_rows", std::move(y), parts,
                                        [inputs](Graph& g, const Tensor& gy) {
    std::size_t offset = 0;
    for (Var v : inputs) {
      const std::size_t n = g.value(v).size();
      if (g.requires_grad(v)) {
        double* dst = g.grad_buffer(v).data();
        for (std::size_t i = 0; i < n; ++i) dst[i] += gy[offset + i];
      }
      offset += n;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  std::vector<Tensor> values;
  values.reserve(parts.size());
  for (Var v : parts) {
    require_rank2(v, "concat_cols");
    values.push_back(v.value());
  }
  Tensor y = cosg::concat_cols(values);
  std::vector<Var> inputs(parts.begin(), parts.end());
  return graph_of(parts.front()).record("concat_cols", std::move(y), parts,
                                        [inputs](Graph& g, const Tensor& gy) {
    const std::size_t total = gy.cols();
    std::size_t offset = 0;
    for (Var v : inputs) {
      const std::size_t c = g.value(v).cols();
      if (g.requires_grad(v)) {
        Tensor& gv = g.grad_buffer(v);
        for (std::size_t r = 0; r < gv.rows(); ++r)
          for (std::size_t k = 0; k < c; ++k) gv[r * c + k] += gy[r * total + offset + k];
      }
      offset += c;
    }
  });
}

Var slice_rows(Var x, std::size_t begin, std::size_t count) {
  require_rank2(x, "slice_rows");
  Tensor y = x.value().slice_rows(begin, count);
  return graph_of(x).record("slice_rows", std::move(y), {x}, [x, begin](Graph& g, const Tensor& gy) {
    double* dst = g.grad_buffer(x).data() + begin * gy.cols();
    for (std::size_t i = 0; i < gy.size(); ++i) dst[i] += gy[i];
  });
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  require_rank2(x, "slice_cols");
  const std::size_t c = x.cols();
  if (begin + count > c) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", +" + std::to_string(count) +
                         ") out of range for " + shape_string(x.shape()));
  }
  const Tensor& xv = x.value();
  Tensor y(xv.rows(), count);
  for (std::size_t r = 0; r < xv.rows(); ++r)
    std::copy_n(xv.data() + r * c + begin, count, y.data() + r * count);
  return graph_of(x).record("slice_cols", std::move(y), {x}, [x, begin](Graph& g, const Tensor& gy) {
    Tensor& gx = g.grad_buffer(x);
    const std::size_t c = gx.cols(), count = gy.cols();
    for (std::size_t r = 0; r < gy.rows(); ++r)
      for (std::size_t k = 0; k < count; ++k) gx[r * c + begin + k] += gy[r * count + k];
  });
}

Var gather_rows(Var x, std::vector<std::size_t> indices) {
  require_rank2(x, "gather_rows");
  const Tensor& xv = x.value();
  const std::size_t c = xv.cols();
  Tensor y(indices.size(), c);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= xv.rows()) {
      throw DimensionError("gather_rows: index " + std::to_string(indices[i]) + " out of range for " +
                           shape_string(xv.shape()));
    }
    std::copy_n(xv.data() + indices[i] * c, c, y.data() + i * c);
  }
  auto idx = std::make_shared<std::vector<std::size_t>>(std::move(indices));
  return graph_of(x).record("gather_rows", std::move(y), {x}, [x, idx](Graph& g, const Tensor& gy) {
    Tensor& gx = g.grad_buffer(x);
    const std::size_t c = gx.cols();
    for (std::size_t i = 0; i < idx->size(); ++i) {
      double* dst = gx.data() + (*idx)[i] * c;
      for (std::size_t k = 0; k < c; ++k) dst[k] += gy[i * c + k];
    }
  });
}

Var unfold_time(Var x, std::size_t kernel, std::size_t segment) {
  require_rank2(x, "unfold_time");
  const Tensor& xv = x.value();
  const std::size_t rows = xv.rows(), d = xv.cols();
  if (kernel == 0 || kernel % 2 == 0) throw ConfigError("unfold_time: kernel must be odd");
  if (segment == 0 || rows % segment != 0) {
    throw DimensionError("unfold_time: " + std::to_string(rows) + " rows is not a multiple of segment " +
                         std::to_string(segment));
  }
  const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
  // (dst row, tap, src row) triples; src < 0 means zero padding.
  auto taps = std::make_shared<std::vector<std::ptrdiff_t>>(rows * kernel, -1);
  Tensor y(rows, kernel * d);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto seg_begin = static_cast<std::ptrdiff_t>((r / segment) * segment);
    const auto local = static_cast<std::ptrdiff_t>(r) - seg_begin;
    for (std::size_t k = 0; k < kernel; ++k) {
      const std::ptrdiff_t src = local + static_cast<std::ptrdiff_t>(k) - half;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(segment)) continue;
      const std::size_t s = static_cast<std::size_t>(seg_begin + src);
      (*taps)[r * kernel + k] = static_cast<std::ptrdiff_t>(s);
      std::copy_n(xv.data() + s * d, d, y.data() + r * kernel * d + k * d);
    }
  }
  return graph_of(x).record("unfold_time", std::move(y), {x}, [x, taps, kernel](Graph& g, const Tensor& gy) {
    Tensor& gx = g.grad_buffer(x);
    const std::size_t d = gx.cols();
    for (std::size_t i = 0; i < taps->size(); ++i) {
      const std::ptrdiff_t s = (*taps)[i];
      if (s < 0) continue;
      const std::size_t r = i / kernel, k = i % kernel;
      double* dst = gx.data() + static_cast<std::size_t>(s) * d;
      const double* src = gy.data() + r * kernel * d + k * d;
      for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
    }
  });
}

Var gru_sequence(Var xp, Var wh, Var bh, std::size_t windows, bool reverse) {
  require_rank2(xp, "gru_sequence");
  require_rank2(wh, "gru_sequence");
  const std::size_t h = wh.rows();
  if (wh.cols() != 3 * h || xp.cols() != 3 * h || bh.value().size() != 3 * h) {
    throw DimensionError("gru_sequence: inputs " + shape_string(xp.shape()) + ", weight " +
                         shape_string(wh.shape()) + " and bias " + shape_string(bh.shape()) +
                         " do not describe a 3h gate layout");
  }
  if (windows == 0 || xp.rows() % windows != 0) {
    throw DimensionError("gru_sequence: " + std::to_string(xp.rows()) + " rows is not a multiple of " +
                         std::to_string(windows) + " windows");
  }
  const std::size_t steps = xp.rows() / windows;
  const auto time_at = [steps, reverse](std::size_t s) { return reverse ? steps - 1 - s : s; };

  // Gate activations r, z, n, the recurrent candidate term sn and the
  // states themselves, per row.
  auto gates = std::make_shared<std::array<Tensor, 5>>();
  for (Tensor& t : *gates) t = Tensor(xp.rows(), h);
  Tensor y(xp.rows(), h);
  const Tensor& xv = xp.value();
  RowMat prev = RowMat::Zero(static_cast<Eigen::Index>(windows), static_cast<Eigen::Index>(h));
  RowMat s_mat(static_cast<Eigen::Index>(windows), static_cast<Eigen::Index>(3 * h));
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t base = time_at(s) * windows;
    s_mat.noalias() = prev * as_mat(wh.value());
    s_mat.rowwise() += as_row(bh.value());
    for (std::size_t w = 0; w < windows; ++w) {
      const std::size_t row = base + w;
      const double* x = xv.data() + row * 3 * h;
      for (std::size_t j = 0; j < h; ++j) {
        const auto wi = static_cast<Eigen::Index>(w), ji = static_cast<Eigen::Index>(j);
        const double r = sigmoid_scalar(x[j] + s_mat(wi, ji));
        const double z = sigmoid_scalar(x[h + j] + s_mat(wi, ji + static_cast<Eigen::Index>(h)));
        const double sn = s_mat(wi, ji + static_cast<Eigen::Index>(2 * h));
        const double n = std::tanh(x[2 * h + j] + r * sn);
        const double out = n + z * (prev(wi, ji) - n);
        (*gates)[0](row, j) = r;
        (*gates)[1](row, j) = z;
        (*gates)[2](row, j) = n;
        (*gates)[3](row, j) = sn;
        y(row, j) = out;
      }
    }
    prev = as_mat(y).middleRows(static_cast<Eigen::Index>(base), static_cast<Eigen::Index>(windows));
  }

  (*gates)[4] = y;
  return graph_of(xp).record("gru_sequence", std::move(y), {xp, wh, bh},
                             [xp, wh, bh, gates, windows, steps, time_at, h](Graph& g, const Tensor& gy) {
    const Tensor& ys = (*gates)[4];
    const auto [r_all, z_all, n_all, sn_all] = std::tie((*gates)[0], (*gates)[1], (*gates)[2], (*gates)[3]);
    const auto W = static_cast<Eigen::Index>(windows), H = static_cast<Eigen::Index>(h);
    RowMat dprev = RowMat::Zero(W, H), direct(W, H), ds(W, 3 * H), prev(W, H);
    for (std::size_t s = steps; s-- > 0;) {
      const std::size_t base = time_at(s) * windows;
      if (s == 0) {
        prev.setZero();
      } else {
        prev = as_mat(ys).middleRows(static_cast<Eigen::Index>(time_at(s - 1) * windows), W);
      }
      for (std::size_t w = 0; w < windows; ++w) {
        const std::size_t row = base + w;
        for (std::size_t j = 0; j < h; ++j) {
          const auto wi = static_cast<Eigen::Index>(w), ji = static_cast<Eigen::Index>(j);
          const double r = r_all(row, j), z = z_all(row, j), n = n_all(row, j), sn = sn_all(row, j);
          const double dh = gy(row, j) + dprev(wi, ji);
          const double dn = dh * (1.0 - z);
          const double dz = dh * (prev(wi, ji) - n);
          direct(wi, ji) = dh * z;
          const double dan = dn * (1.0 - n * n);
          const double dar = dan * sn * r * (1.0 - r);
          const double daz = dz * z * (1.0 - z);
          ds(wi, ji) = dar;
          ds(wi, ji + H) = daz;
          ds(wi, ji + 2 * H) = dan * r;
          if (g.requires_grad(xp)) {
            double* gx = g.grad_buffer(xp).data() + row * 3 * h;
            gx[j] += dar;
            gx[h + j] += daz;
            gx[2 * h + j] += dan;
          }
        }
      }
      if (g.requires_grad(wh)) as_mat(g.grad_buffer(wh)).noalias() += prev.transpose() * ds;
      if (g.requires_grad(bh)) as_row(g.grad_buffer(bh)) += ds.colwise().sum();
      dprev = direct;
      dprev.noalias() += ds * as_mat(g.value(wh)).transpose();
    }
  });
}

}  // namespace cosg
