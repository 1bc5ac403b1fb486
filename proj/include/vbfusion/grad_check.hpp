// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "vbfusion/params.hpp"
#include "vbfusion/rng.hpp"
#include "vbfusion/tensor.hpp"

namespace vbf {

/// Independent oracle for every backward rule: compares analytic gradients
/// against central finite differences on randomly sampled entries of the
/// non-frozen parameters.
///
/// `loss_fn` must rebuild the forward graph from the current parameter
/// values on every call and return a scalar. Returns the maximum of
/// |analytic - numeric| / max(1e-8, |analytic| + |numeric|) over all probes.
inline double finite_diff_grad_check(const std::function<Tensor()>& loss_fn,
                                     const std::vector<Parameter*>& params,
                                     double step, int samples_per_param,
                                     Pcg32& rng) {
  if (step <= 0.0) throw std::runtime_error("grad check: step must be > 0");
  bool any_trainable = false;
  for (const Parameter* p : params) any_trainable = any_trainable || !p->frozen;
  if (!any_trainable)
    throw std::runtime_error("grad check: no non-frozen parameters");

  zero_grads(params);
  Tensor loss = loss_fn();
  if (!std::isfinite(loss.item()))
    throw std::runtime_error("grad check: non-finite loss");
  backward(loss);

  double max_rel = 0.0;
  for (Parameter* p : params) {
    if (p->frozen) continue;
    size_t n = p->tensor.size();
    int probes = std::min<size_t>(static_cast<size_t>(samples_per_param), n);
    for (int s = 0; s < probes; ++s) {
      size_t idx = n == 1 ? 0 : static_cast<size_t>(rng.bounded(static_cast<uint32_t>(n)));
      double analytic = p->tensor.grad()[idx];
      double saved = p->tensor.values()[idx];

      p->tensor.values()[idx] = saved + step;
      double up = loss_fn().item();
      p->tensor.values()[idx] = saved - step;
      double down = loss_fn().item();
      p->tensor.values()[idx] = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw std::runtime_error("grad check: non-finite loss");

      double numeric = (up - down) / (2.0 * step);
      double rel = std::abs(analytic - numeric) /
                   std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace vbf
