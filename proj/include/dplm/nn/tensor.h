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

#ifndef DPLM_NN_TENSOR_H_
#define DPLM_NN_TENSOR_H_

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dplm/core/error.h"

namespace dplm::nn {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMatrix>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

// Flat storage aligned to the vector width. Eigen peels reductions up to the
// first aligned element, so heap-dependent alignment would change summation
// order from run to run.
using Buffer = std::vector<double, Eigen::aligned_allocator<double>>;

// Channel-major activation volume: channels x frames x bins.
struct Tensor3 {
  int channels = 0;
  int frames = 0;
  int bins = 0;
  Buffer data;

  Tensor3() = default;
  Tensor3(int c, int t, int f, double fill = 0.0)
      : channels(c), frames(t), bins(f),
        data(static_cast<std::size_t>(c) * t * f, fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(frames) * bins; }
  double& at(int c, int t, int f) {
    return data[(static_cast<std::size_t>(c) * frames + t) * bins + f];
  }
  double at(int c, int t, int f) const {
    return data[(static_cast<std::size_t>(c) * frames + t) * bins + f];
  }
  bool SameShape(const Tensor3& o) const {
    return channels == o.channels && frames == o.frames && bins == o.bins;
  }
  // View as channels x (frames * bins).
  RowMap matrix() { return RowMap(data.data(), channels, plane()); }
  ConstRowMap matrix() const {
    return ConstRowMap(data.data(), channels, plane());
  }
};

using Batch = std::vector<Tensor3>;
using SequenceBatch = std::vector<RowMatrix>;  // each frames x features

// Named parameter or buffer tensor, stored flat.
struct Parameter {
  std::string name;
  std::vector<int> shape;
  Buffer value;
  bool trainable = true;
};

// Owns every tensor of a model. Layers refer to entries by index.
class ParameterStore {
 public:
  int Add(std::string name, std::vector<int> shape, bool trainable,
          double fill = 0.0) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    params_.push_back(
        {std::move(name), std::move(shape), Buffer(n, fill),
         trainable});
    return static_cast<int>(params_.size()) - 1;
  }

  Parameter& at(int idx) { return params_[idx]; }
  const Parameter& at(int idx) const { return params_[idx]; }
  double* data(int idx) { return params_[idx].value.data(); }
  const double* data(int idx) const { return params_[idx].value.data(); }
  std::size_t size() const { return params_.size(); }
  std::vector<Parameter>& all() { return params_; }
  const std::vector<Parameter>& all() const { return params_; }

  std::size_t NumTrainableValues() const {
    std::size_t n = 0;
    for (const auto& p : params_) {
      if (p.trainable) n += p.value.size();
    }
    return n;
  }

 private:
  std::vector<Parameter> params_;
};

// Gradient buffers parallel to a ParameterStore.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ParameterStore& store) {
    buffers_.reserve(store.size());
    for (const auto& p : store.all()) {
      buffers_.emplace_back(p.value.size(), 0.0);
    }
  }

  double* data(int idx) { return buffers_[idx].data(); }
  Buffer& operator[](int idx) { return buffers_[idx]; }
  const Buffer& operator[](int idx) const {
    return buffers_[idx];
  }
  std::size_t size() const { return buffers_.size(); }

  void Zero() {
    for (auto& b : buffers_) std::fill(b.begin(), b.end(), 0.0);
  }

 private:
  std::vector<Buffer> buffers_;
};

}  // namespace dplm::nn

#endif  // DPLM_NN_TENSOR_H_
