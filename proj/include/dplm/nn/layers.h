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

#ifndef DPLM_NN_LAYERS_H_
#define DPLM_NN_LAYERS_H_

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dplm/core/random.h"
#include "dplm/nn/tensor.h"

namespace dplm::nn {

inline constexpr double kBatchNormEps = 1e-5;

inline double LeakyRelu(double x, double slope) { return x > 0 ? x : slope * x; }
inline double LeakyReluGrad(double x, double slope) { return x > 0 ? 1.0 : slope; }

// Stride-1 "same" 2-D convolution over (frames, bins), no bias (a batch-norm
// always follows).
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParameterStore* store, const std::string& name, int in_channels,
         int out_channels, int kernel, double leaky_slope, Rng* rng)
      : in_(in_channels), out_(out_channels), kernel_(kernel) {
    weight_ = store->Add(name + ".weight",
                         {out_channels, in_channels, kernel, kernel}, true);
    // He initialization for leaky rectifiers.
    const double fan_in = static_cast<double>(in_channels) * kernel * kernel;
    const double stddev =
        std::sqrt(2.0 / ((1.0 + leaky_slope * leaky_slope) * fan_in));
    for (double& w : store->at(weight_).value) w = stddev * rng->Normal();
  }

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }

  Tensor3 Forward(const ParameterStore& store, const Tensor3& x) const {
    Require(x.channels == in_, "conv input channel mismatch");
    Tensor3 y(out_, x.frames, x.bins);
    const ConstRowMap w(store.data(weight_), out_, in_ * kernel_ * kernel_);
    if (kernel_ == 1) {
      y.matrix().noalias() = w * x.matrix();
    } else {
      const RowMatrix cols = Im2Col(x);
      y.matrix().noalias() = w * cols;
    }
    return y;
  }

  // Accumulates into the weight gradient and, when `dx` is non-null, into dx.
  void Backward(const ParameterStore& store, const Tensor3& x,
                const Tensor3& dy, Tensor3* dx, Gradients* grads) const {
    const int rows = in_ * kernel_ * kernel_;
    const ConstRowMap w(store.data(weight_), out_, rows);
    RowMap dw(grads->data(weight_), out_, rows);
    if (kernel_ == 1) {
      dw.noalias() += dy.matrix() * x.matrix().transpose();
      if (dx != nullptr) dx->matrix().noalias() += w.transpose() * dy.matrix();
      return;
    }
    const RowMatrix cols = Im2Col(x);
    dw.noalias() += dy.matrix() * cols.transpose();
    if (dx != nullptr) {
      const RowMatrix dcols = w.transpose() * dy.matrix();
      Col2ImAdd(dcols, dx);
    }
  }

 private:
  RowMatrix Im2Col(const Tensor3& x) const {
    const int pad = kernel_ / 2;
    const int frames = x.frames;
    const int bins = x.bins;
    RowMatrix cols = RowMatrix::Zero(in_ * kernel_ * kernel_,
                                     static_cast<Eigen::Index>(x.plane()));
    for (int c = 0; c < in_; ++c) {
      for (int dt = 0; dt < kernel_; ++dt) {
        for (int df = 0; df < kernel_; ++df) {
          double* row = &cols((c * kernel_ + dt) * kernel_ + df, 0);
          for (int t = 0; t < frames; ++t) {
            const int st = t + dt - pad;
            if (st < 0 || st >= frames) continue;
            const double* src = &x.data[(static_cast<std::size_t>(c) * frames + st) * bins];
            double* dst = row + static_cast<std::size_t>(t) * bins;
            const int f_lo = std::max(0, pad - df);
            const int f_hi = std::min(bins, bins + pad - df);
            for (int f = f_lo; f < f_hi; ++f) dst[f] = src[f + df - pad];
          }
        }
      }
    }
    return cols;
  }

  void Col2ImAdd(const RowMatrix& cols, Tensor3* dx) const {
    const int pad = kernel_ / 2;
    const int frames = dx->frames;
    const int bins = dx->bins;
    for (int c = 0; c < in_; ++c) {
      for (int dt = 0; dt < kernel_; ++dt) {
        for (int df = 0; df < kernel_; ++df) {
          const double* row = &cols((c * kernel_ + dt) * kernel_ + df, 0);
          for (int t = 0; t < frames; ++t) {
            const int st = t + dt - pad;
            if (st < 0 || st >= frames) continue;
            double* dst = &dx->data[(static_cast<std::size_t>(c) * frames + st) * bins];
            const double* src = row + static_cast<std::size_t>(t) * bins;
            const int f_lo = std::max(0, pad - df);
            const int f_hi = std::min(bins, bins + pad - df);
            for (int f = f_lo; f < f_hi; ++f) dst[f + df - pad] += src[f];
          }
        }
      }
    }
  }

  int in_ = 0;
  int out_ = 0;
  int kernel_ = 1;
  int weight_ = -1;
};

// Per-channel batch normalization over (batch, frames, bins).
class BatchNorm {
 public:
  struct Cache {
    bool training = false;
    std::size_t count = 0;
    std::vector<double> mean;
    std::vector<double> var;  // biased batch variance, or running variance
  };

  BatchNorm() = default;
  BatchNorm(ParameterStore* store, const std::string& name, int channels)
      : channels_(channels) {
    gamma_ = store->Add(name + ".gamma", {channels}, true, 1.0);
    beta_ = store->Add(name + ".beta", {channels}, true, 0.0);
    running_mean_ = store->Add(name + ".running_mean", {channels}, false, 0.0);
    running_var_ = store->Add(name + ".running_var", {channels}, false, 1.0);
  }

  Batch Forward(const ParameterStore& store, const Batch& xs, bool training,
                Cache* cache) const {
    cache->training = training;
    cache->mean.assign(channels_, 0.0);
    cache->var.assign(channels_, 0.0);
    if (training) {
      std::size_t count = 0;
      for (const auto& x : xs) count += x.plane();
      cache->count = count;
      for (int c = 0; c < channels_; ++c) {
        double sum = 0.0;
        for (const auto& x : xs) sum += x.matrix().row(c).sum();
        const double mean = sum / count;
        double sq = 0.0;
        for (const auto& x : xs) {
          sq += (x.matrix().row(c).array() - mean).square().sum();
        }
        cache->mean[c] = mean;
        cache->var[c] = sq / count;
      }
    } else {
      cache->mean.assign(store.at(running_mean_).value.begin(),
                         store.at(running_mean_).value.end());
      cache->var.assign(store.at(running_var_).value.begin(),
                        store.at(running_var_).value.end());
    }
    const double* gamma = store.data(gamma_);
    const double* beta = store.data(beta_);
    Batch ys;
    ys.reserve(xs.size());
    for (const auto& x : xs) {
      Tensor3 y(x.channels, x.frames, x.bins);
      for (int c = 0; c < channels_; ++c) {
        const double scale = gamma[c] / std::sqrt(cache->var[c] + kBatchNormEps);
        const double shift = beta[c] - scale * cache->mean[c];
        y.matrix().row(c) = (x.matrix().row(c).array() * scale + shift).matrix();
      }
      ys.push_back(std::move(y));
    }
    return ys;
  }

  // `xs` are the forward inputs. Results are written (not accumulated) to dxs.
  void Backward(const ParameterStore& store, const Batch& xs, const Batch& dys,
                const Cache& cache, Batch* dxs, Gradients* grads) const {
    const double* gamma = store.data(gamma_);
    double* dgamma = grads->data(gamma_);
    double* dbeta = grads->data(beta_);
    dxs->resize(xs.size());
    for (std::size_t b = 0; b < xs.size(); ++b) {
      (*dxs)[b] = Tensor3(xs[b].channels, xs[b].frames, xs[b].bins);
    }
    for (int c = 0; c < channels_; ++c) {
      const double inv_std = 1.0 / std::sqrt(cache.var[c] + kBatchNormEps);
      const double mean = cache.mean[c];
      double sum_dy = 0.0;
      double sum_dy_xhat = 0.0;
      for (std::size_t b = 0; b < xs.size(); ++b) {
        const auto x = xs[b].matrix().row(c).array();
        const auto dy = dys[b].matrix().row(c).array();
        sum_dy += dy.sum();
        sum_dy_xhat += (dy * (x - mean) * inv_std).sum();
      }
      dgamma[c] += sum_dy_xhat;
      dbeta[c] += sum_dy;
      for (std::size_t b = 0; b < xs.size(); ++b) {
        const auto x = xs[b].matrix().row(c).array();
        const auto dy = dys[b].matrix().row(c).array();
        auto dx = (*dxs)[b].matrix().row(c).array();
        if (cache.training) {
          const double n = static_cast<double>(cache.count);
          dx = gamma[c] * inv_std *
               (dy - sum_dy / n - (x - mean) * inv_std * (sum_dy_xhat / n));
        } else {
          dx = gamma[c] * inv_std * dy;
        }
      }
    }
  }

  void UpdateRunningStats(ParameterStore* store, const Cache& cache,
                          double momentum) const {
    double* rm = store->data(running_mean_);
    double* rv = store->data(running_var_);
    const double n = static_cast<double>(cache.count);
    const double unbias = n > 1 ? n / (n - 1) : 1.0;
    for (int c = 0; c < channels_; ++c) {
      rm[c] = (1 - momentum) * rm[c] + momentum * cache.mean[c];
      rv[c] = (1 - momentum) * rv[c] + momentum * cache.var[c] * unbias;
    }
  }

 private:
  int channels_ = 0;
  int gamma_ = -1;
  int beta_ = -1;
  int running_mean_ = -1;
  int running_var_ = -1;
};

// 3x3 stride-1 max-pool with implicit -inf padding; shape preserving.
struct MaxPool3x3Result {
  Tensor3 out;
  std::vector<int> argmax;  // flat input index per output element
};

inline MaxPool3x3Result MaxPool3x3(const Tensor3& x) {
  MaxPool3x3Result r{Tensor3(x.channels, x.frames, x.bins), {}};
  r.argmax.resize(x.size());
  for (int c = 0; c < x.channels; ++c) {
    for (int t = 0; t < x.frames; ++t) {
      for (int f = 0; f < x.bins; ++f) {
        double best = -std::numeric_limits<double>::infinity();
        int best_idx = 0;
        for (int dt = -1; dt <= 1; ++dt) {
          const int st = t + dt;
          if (st < 0 || st >= x.frames) continue;
          for (int df = -1; df <= 1; ++df) {
            const int sf = f + df;
            if (sf < 0 || sf >= x.bins) continue;
            const int idx = (c * x.frames + st) * x.bins + sf;
            if (x.data[idx] > best) {
              best = x.data[idx];
              best_idx = idx;
            }
          }
        }
        const int out_idx = (c * x.frames + t) * x.bins + f;
        r.out.data[out_idx] = best;
        r.argmax[out_idx] = best_idx;
      }
    }
  }
  return r;
}

// 1x2 max-pool along bins with stride 2; an odd trailing bin is dropped.
struct FreqPoolResult {
  Tensor3 out;
  std::vector<int> argmax;
};

inline FreqPoolResult FreqPool(const Tensor3& x) {
  const int half = x.bins / 2;
  FreqPoolResult r{Tensor3(x.channels, x.frames, half), {}};
  r.argmax.resize(r.out.size());
  for (int c = 0; c < x.channels; ++c) {
    for (int t = 0; t < x.frames; ++t) {
      const int row = (c * x.frames + t);
      for (int f = 0; f < half; ++f) {
        const int a = row * x.bins + 2 * f;
        const int best = x.data[a + 1] > x.data[a] ? a + 1 : a;
        r.out.data[row * half + f] = x.data[best];
        r.argmax[row * half + f] = best;
      }
    }
  }
  return r;
}

// Routes `dy` back through a recorded argmax into `dx` (accumulating).
inline void ScatterArgmax(const std::vector<int>& argmax, const Tensor3& dy,
                          Tensor3* dx) {
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    dx->data[argmax[i]] += dy.data[i];
  }
}

// Fully connected layer applied per row: y = x W^T + b.
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore* store, const std::string& name, int in, int out,
         Rng* rng)
      : in_(in), out_(out) {
    weight_ = store->Add(name + ".weight", {out, in}, true);
    bias_ = store->Add(name + ".bias", {out}, true, 0.0);
    const double bound = std::sqrt(6.0 / (in + out));
    for (double& w : store->at(weight_).value) w = rng->Uniform(-bound, bound);
  }

  int out_features() const { return out_; }

  RowMatrix Forward(const ParameterStore& store, const RowMatrix& x) const {
    Require(x.cols() == in_, "linear input width mismatch");
    const ConstRowMap w(store.data(weight_), out_, in_);
    const Eigen::Map<const Eigen::RowVectorXd> b(store.data(bias_), out_);
    RowMatrix y = x * w.transpose();
    y.rowwise() += b;
    return y;
  }

  // Returns dx; accumulates parameter gradients.
  RowMatrix Backward(const ParameterStore& store, const RowMatrix& x,
                     const RowMatrix& dy, Gradients* grads) const {
    const ConstRowMap w(store.data(weight_), out_, in_);
    RowMap dw(grads->data(weight_), out_, in_);
    Eigen::Map<Eigen::RowVectorXd> db(grads->data(bias_), out_);
    dw.noalias() += dy.transpose() * x;
    db += dy.colwise().sum();
    return dy * w;
  }

 private:
  int in_ = 0;
  int out_ = 0;
  int weight_ = -1;
  int bias_ = -1;
};

}  // namespace dplm::nn

#endif  // DPLM_NN_LAYERS_H_
