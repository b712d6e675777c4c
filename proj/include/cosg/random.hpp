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
#include <random>

#include "cosg/tensor.hpp"

namespace cosg {

/// Seeded generator with platform-independent draws. The standard
/// distributions are implementation-defined, so uniform and normal variates
/// are derived from the raw 64-bit engine output here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * n); }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) std::swap(first[i - 1], first[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

Tensor random_normal(Shape shape, Rng& rng);
Tensor random_uniform(Shape shape, double lo, double hi, Rng& rng);

/// SplitMix64 step; used for hashing-based deterministic streams.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace cosg
