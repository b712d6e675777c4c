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
#include <span>
#include <vector>

#include "cosg/tensor.hpp"

namespace cosg {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.98;
  double eps = 1e-8;
};

/// Moment buffers for one parameter group. Buffers are created on the first
/// step and keyed by position in the parameter list, which must stay fixed.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  /// Per-parameter update count, used for bias correction.
  std::vector<std::uint64_t> updates;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam step over `params` using their `grad` buffers.
/// A parameter whose gradient is identically zero is left untouched (its
/// moments are not decayed either), so frozen branches stay frozen.
/// Throws NumericError naming the first parameter with a non-finite gradient.
void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& config);

class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig config)
      : params_(std::move(params)), config_(config) {}

  void step() { adam_step(params_, state_, config_); }
  void zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
  }
  const AdamState& state() const { return state_; }
  const AdamConfig& config() const { return config_; }
  std::span<Parameter* const> params() const { return params_; }

 private:
  std::vector<Parameter*> params_;
  AdamConfig config_;
  AdamState state_;
};

}  // namespace cosg
