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

#include "cosg/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "cosg/errors.hpp"
#include "cosg/random.hpp"

namespace cosg {
namespace {

double evaluate(const ScalarFn& f, const Tensor& x, const std::vector<Tensor>& bases) {
  Graph g;
  g.reflect_reversals(bases);
  const double y = g.item(f(g, g.constant(x)));
  if (!std::isfinite(y)) throw NumericError("grad_check: non-finite function value");
  return y;
}

double evaluate(const std::function<Var(Graph&)>& loss, const std::vector<Tensor>& bases) {
  Graph g;
  g.reflect_reversals(bases);
  const double y = g.item(loss(g));
  if (!std::isfinite(y)) throw NumericError("grad_check: non-finite function value");
  return y;
}

double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
}

}  // namespace

double grad_check(const ScalarFn& f, const Tensor& x, double eps) {
  if (!(eps > 0.0 && eps <= 1e-2)) throw ConfigError("grad_check: eps must lie in (0, 1e-2]");
  Tensor analytic;
  std::vector<Tensor> bases;
  {
    Graph g;
    g.capture_reversal_inputs();
    Var in = g.variable(x);
    g.backward(f(g, in));
    analytic = g.grad(in).empty() ? Tensor(x.shape()) : g.grad(in);
    bases = g.take_reversal_inputs();
  }
  double worst = 0.0;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = evaluate(f, probe, bases);
    probe[i] = x[i] - eps;
    const double down = evaluate(f, probe, bases);
    probe[i] = x[i];
    worst = std::max(worst, rel_error(analytic[i], (up - down) / (2.0 * eps)));
  }
  return worst;
}

double grad_check_params(const std::function<Var(Graph&)>& loss,
                         const std::vector<Parameter*>& params, double eps,
                         std::size_t max_coords, std::uint64_t seed) {
  if (!(eps > 0.0 && eps <= 1e-2)) throw ConfigError("grad_check: eps must lie in (0, 1e-2]");
  for (Parameter* p : params) p->zero_grad();
  std::vector<Tensor> bases;
  {
    Graph g;
    g.capture_reversal_inputs();
    g.backward(loss(g));
    bases = g.take_reversal_inputs();
  }
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t p = 0; p < params.size(); ++p)
    for (std::size_t i = 0; i < params[p]->value.size(); ++i) coords.emplace_back(p, i);
  if (max_coords > 0 && coords.size() > max_coords) {
    Rng rng(seed);
    rng.shuffle(coords.begin(), coords.end());
    coords.resize(max_coords);
  }
  double worst = 0.0;
  for (auto [p, i] : coords) {
    double& w = params[p]->value[i];
    const double saved = w;
    w = saved + eps;
    const double up = evaluate(loss, bases);
    w = saved - eps;
    const double down = evaluate(loss, bases);
    w = saved;
    worst = std::max(worst, rel_error(params[p]->grad[i], (up - down) / (2.0 * eps)));
  }
  return worst;
}

}  // namespace cosg
