// Copyright 2026 The editrep Authors. All Rights Reserved.
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

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "editrep/tensor.hpp"

namespace editrep::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t probes = 0;
};

// Relative error with a floor so that two near-zero gradients compare equal.
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic) + std::abs(numeric), 1e-6});
}

// Compares backprop gradients of loss(tape) with central differences at
// `probes` random coordinates spread over params.
inline GradCheckResult grad_check(const std::function<Var(Tape&)>& loss,
                                  const std::vector<Tensor*>& params, std::size_t probes,
                                  std::uint64_t seed, double step = 1e-5) {
  for (Tensor* p : params) {
    p->set_requires_grad(true);
    p->zero_grad();
  }
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  auto value = [&] {
    Tape tape;
    return loss(tape).item();
  };
  Rng rng(seed);
  GradCheckResult r;
  for (std::size_t i = 0; i < probes; ++i) {
    Tensor* p = params[rng.below(params.size())];
    const std::size_t k = rng.below(p->numel());
    const double saved = (*p)[k];
    (*p)[k] = saved + step;
    const double up = value();
    (*p)[k] = saved - step;
    const double down = value();
    (*p)[k] = saved;
    const double numeric = (up - down) / (2.0 * step);
    r.max_rel_error = std::max(r.max_rel_error, relative_error(p->grad()[k], numeric));
    ++r.probes;
  }
  return r;
}

}  // namespace editrep::testing
