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

#include "cosg/adam.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "cosg/errors.hpp"

namespace cosg {

void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& config) {
  if (state.m.empty()) {
    for (const Parameter* p : params) {
      state.m.emplace_back(p->value.shape());
      state.v.emplace_back(p->value.shape());
    }
    state.updates.assign(params.size(), 0);
  }
  if (state.m.size() != params.size()) {
    throw DimensionError("adam: state holds " + std::to_string(state.m.size()) +
                         " buffers for " + std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = *params[i];
    if (!p.grad.all_finite()) {
      throw NumericError("adam: non-finite gradient in parameter " + std::to_string(i) + " (" +
                         p.name + ")");
    }
    if (!p.grad.same_shape(p.value) || !state.m[i].same_shape(p.value)) {
      throw DimensionError("adam: shape mismatch for parameter " + p.name);
    }
  }
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    const auto g = p.grad.values();
    if (std::all_of(g.begin(), g.end(), [](double x) { return x == 0.0; })) continue;
    const auto t = static_cast<double>(++state.updates[i]);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::Map<const Eigen::ArrayXd> ga(g.data(), n);
    Eigen::Map<Eigen::ArrayXd> m(state.m[i].data(), n), v(state.v[i].data(), n), w(p.value.data(), n);
    m = config.beta1 * m + (1.0 - config.beta1) * ga;
    v = config.beta2 * v + (1.0 - config.beta2) * ga.square();
    w -= config.lr * (m / c1) / ((v / c2).sqrt() + config.eps);
  }
}

}  // namespace cosg
