/* Copyright 2026 The atraj Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ATRAJ_GRAD_CHECK_HPP_
#define ATRAJ_GRAD_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "atraj/graph.hpp"

namespace atraj {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_leaf = 0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  bool passed = true;
};

struct GradCoordinate {
  std::size_t leaf = 0;
  std::size_t index = 0;
};

/// Denominator floor of the relative discrepancy
/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline constexpr double kGradCheckFloor = 1e-6;

inline double relative_discrepancy(double analytic, double numeric) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  return std::abs(analytic - numeric) / denom;
}

/// Compares reverse-mode gradients of the scalar `f` against central
/// differences at the selected coordinates (all coordinates when `coords` is
/// empty). `f` must register each leaf through `Graph::parameter` and be
/// deterministic; two unperturbed evaluations that disagree raise
/// ContractError.
template <typename S>
GradCheckReport grad_check(const std::function<Var<S>(Graph<S> &)> &f,
                           const std::vector<Tensor<S> *> &leaves,
                           std::vector<GradCoordinate> coords, double step,
                           double tol) {
  for (Tensor<S> *leaf : leaves) {
    if (!leaf->requires_grad()) leaf->set_requires_grad(true);
  }
  std::vector<Vector<S>> analytic;
  double base = 0.0;
  {
    Graph<S> g;
    Var<S> loss = f(g);
    base = static_cast<double>(loss.value()[0]);
    g.backward(loss);
    for (Tensor<S> *leaf : leaves) analytic.push_back(leaf->grad());
  }
  auto evaluate = [&] {
    Graph<S> g;
    return static_cast<double>(f(g).value()[0]);
  };
  if (evaluate() != base) {
    throw ContractError("grad_check: function is not deterministic");
  }
  if (coords.empty()) {
    for (std::size_t l = 0; l < leaves.size(); ++l) {
      for (std::size_t i = 0; i < leaves[l]->size(); ++i) coords.push_back({l, i});
    }
  }

  GradCheckReport report;
  for (const auto &c : coords) {
    S &slot = (*leaves.at(c.leaf))[c.index];
    const S saved = slot;
    slot = saved + static_cast<S>(step);
    const double up = evaluate();
    slot = saved - static_cast<S>(step);
    const double down = evaluate();
    slot = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = static_cast<double>(analytic[c.leaf][static_cast<Eigen::Index>(c.index)]);
    const double rel = relative_discrepancy(a, numeric);
    ++report.checked;
    if (rel > report.max_rel_error || report.checked == 1) {
      report.max_rel_error = std::max(report.max_rel_error, rel);
      if (rel >= report.max_rel_error) {
        report.worst_leaf = c.leaf;
        report.worst_index = c.index;
        report.analytic_at_worst = a;
        report.numeric_at_worst = numeric;
      }
    }
  }
  report.passed = report.max_rel_error <= tol;
  return report;
}

/// Single-tensor convenience form: `f` maps the registered variable to a
/// scalar.
template <typename S>
GradCheckReport grad_check(const std::function<Var<S>(Graph<S> &, Var<S>)> &f,
                           Tensor<S> x, double step, double tol) {
  std::function<Var<S>(Graph<S> &)> wrapped = [&](Graph<S> &g) {
    return f(g, g.parameter(x));
  };
  return grad_check<S>(wrapped, {&x}, {}, step, tol);
}

} // namespace atraj

#endif // ATRAJ_GRAD_CHECK_HPP_
