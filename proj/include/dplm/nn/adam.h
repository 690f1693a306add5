// Copyright 2026 The DPLM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPLM_NN_ADAM_H_
#define DPLM_NN_ADAM_H_

#include <cmath>
#include <vector>

#include "dplm/nn/tensor.h"

namespace dplm::nn {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adaptive-moment optimizer over the trainable entries of a ParameterStore.
class Adam {
 public:
  Adam(const ParameterStore& store, AdamOptions options)
      : options_(options), m_(store), v_(store) {}

  void Step(ParameterStore* store, const Gradients& grads) {
    ++step_;
    const double bc1 = 1.0 - std::pow(options_.beta1, step_);
    const double bc2 = 1.0 - std::pow(options_.beta2, step_);
    for (std::size_t p = 0; p < store->size(); ++p) {
      auto& param = store->at(static_cast<int>(p));
      if (!param.trainable) continue;
      const auto& g = grads[static_cast<int>(p)];
      auto& m = m_[static_cast<int>(p)];
      auto& v = v_[static_cast<int>(p)];
      for (std::size_t i = 0; i < param.value.size(); ++i) {
        m[i] = options_.beta1 * m[i] + (1 - options_.beta1) * g[i];
        v[i] = options_.beta2 * v[i] + (1 - options_.beta2) * g[i] * g[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        param.value[i] -=
            options_.learning_rate * m_hat / (std::sqrt(v_hat) + options_.epsilon);
      }
    }
  }

  long step() const { return step_; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }

 private:
  AdamOptions options_;
  Gradients m_;
  Gradients v_;
  long step_ = 0;
};

}  // namespace dplm::nn

#endif  // DPLM_NN_ADAM_H_
