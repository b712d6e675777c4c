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
#include <functional>
#include <vector>

#include "cosg/graph.hpp"

namespace cosg {

/// Scalar-valued function of a single graph input.
using ScalarFn = std::function<Var(Graph&, Var)>;

/// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
/// Throws NumericError if f is non-finite at x +/- eps. Reversal nodes are
/// reflected about their base input during the perturbed evaluations (see
/// Graph::reflect_reversals), so the reference is the derivative that
/// grad_reverse's backward is defined to produce.
double grad_check(const ScalarFn& f, const Tensor& x, double eps = 1e-5);

/// Same measure w.r.t. parameters bound inside `loss`. When the total
/// coordinate count exceeds `max_coords`, a seeded subset is probed.
double grad_check_params(const std::function<Var(Graph&)>& loss,
                         const std::vector<Parameter*>& params, double eps = 1e-5,
                         std::size_t max_coords = 0, std::uint64_t seed = 7);

}  // namespace cosg
