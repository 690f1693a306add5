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

#ifndef DPLM_NN_LSTM_H_
#define DPLM_NN_LSTM_H_

#include <cmath>
#include <string>

#include "dplm/core/random.h"
#include "dplm/nn/tensor.h"

namespace dplm::nn {

inline double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Single-direction LSTM. Gate order in the stacked weights: input, forget,
// cell, output.
class Lstm {
 public:
  struct Cache {
    RowMatrix gates;  // frames x 4H, post-activation
    RowMatrix cell;   // frames x H
    RowMatrix hidden; // frames x H
  };

  Lstm() = default;
  Lstm(ParameterStore* store, const std::string& name, int in, int hidden,
       bool reverse, Rng* rng)
      : in_(in), hidden_(hidden), reverse_(reverse) {
    wx_ = store->Add(name + ".weight_ih", {4 * hidden, in}, true);
    wh_ = store->Add(name + ".weight_hh", {4 * hidden, hidden}, true);
    bias_ = store->Add(name + ".bias", {4 * hidden}, true, 0.0);
    const double bound_x = std::sqrt(6.0 / (in + hidden));
    const double bound_h = std::sqrt(3.0 / hidden);
    for (double& w : store->at(wx_).value) w = rng->Uniform(-bound_x, bound_x);
    for (double& w : store->at(wh_).value) w = rng->Uniform(-bound_h, bound_h);
    double* b = store->data(bias_);
    for (int j = hidden; j < 2 * hidden; ++j) b[j] = 1.0;
  }

  int hidden() const { return hidden_; }

  // Returns frames x H hidden states in natural time order.
  RowMatrix Forward(const ParameterStore& store, const RowMatrix& x,
                    Cache* cache) const {
    Require(x.cols() == in_, "lstm input width mismatch");
    const int frames = static_cast<int>(x.rows());
    const int h = hidden_;
    const ConstRowMap wx(store.data(wx_), 4 * h, in_);
    const ConstRowMap wh(store.data(wh_), 4 * h, h);
    const Eigen::Map<const Eigen::RowVectorXd> b(store.data(bias_), 4 * h);
    RowMatrix z = x * wx.transpose();
    z.rowwise() += b;
    cache->gates.resize(frames, 4 * h);
    cache->cell.resize(frames, h);
    cache->hidden.resize(frames, h);
    Eigen::RowVectorXd h_prev = Eigen::RowVectorXd::Zero(h);
    Eigen::RowVectorXd c_prev = Eigen::RowVectorXd::Zero(h);
    for (int step = 0; step < frames; ++step) {
      const int t = reverse_ ? frames - 1 - step : step;
      Eigen::RowVectorXd pre = z.row(t) + h_prev * wh.transpose();
      for (int j = 0; j < h; ++j) {
        const double i = Sigmoid(pre[j]);
        const double f = Sigmoid(pre[h + j]);
        const double g = std::tanh(pre[2 * h + j]);
        const double o = Sigmoid(pre[3 * h + j]);
        const double c = f * c_prev[j] + i * g;
        cache->gates(t, j) = i;
        cache->gates(t, h + j) = f;
        cache->gates(t, 2 * h + j) = g;
        cache->gates(t, 3 * h + j) = o;
        cache->cell(t, j) = c;
        cache->hidden(t, j) = o * std::tanh(c);
      }
      h_prev = cache->hidden.row(t);
      c_prev = cache->cell.row(t);
    }
    return cache->hidden;
  }

  // Backpropagation through time. Returns dx; accumulates parameter grads.
  RowMatrix Backward(const ParameterStore& store, const RowMatrix& x,
                     const Cache& cache, const RowMatrix& dh_out,
                     Gradients* grads) const {
    const int frames = static_cast<int>(x.rows());
    const int h = hidden_;
    const ConstRowMap wx(store.data(wx_), 4 * h, in_);
    const ConstRowMap wh(store.data(wh_), 4 * h, h);
    RowMap dwx(grads->data(wx_), 4 * h, in_);
    RowMap dwh(grads->data(wh_), 4 * h, h);
    Eigen::Map<Eigen::RowVectorXd> db(grads->data(bias_), 4 * h);
    RowMatrix dz(frames, 4 * h);
    Eigen::RowVectorXd dh_next = Eigen::RowVectorXd::Zero(h);
    Eigen::RowVectorXd dc_next = Eigen::RowVectorXd::Zero(h);
    for (int step = frames - 1; step >= 0; --step) {
      const int t = reverse_ ? frames - 1 - step : step;
      const bool has_prev = step > 0;
      const int t_prev = reverse_ ? t + 1 : t - 1;
      for (int j = 0; j < h; ++j) {
        const double i = cache.gates(t, j);
        const double f = cache.gates(t, h + j);
        const double g = cache.gates(t, 2 * h + j);
        const double o = cache.gates(t, 3 * h + j);
        const double c = cache.cell(t, j);
        const double c_prev = has_prev ? cache.cell(t_prev, j) : 0.0;
        const double tc = std::tanh(c);
        const double dh = dh_out(t, j) + dh_next[j];
        const double dc = dh * o * (1.0 - tc * tc) + dc_next[j];
        dz(t, j) = dc * g * i * (1.0 - i);
        dz(t, h + j) = dc * c_prev * f * (1.0 - f);
        dz(t, 2 * h + j) = dc * i * (1.0 - g * g);
        dz(t, 3 * h + j) = dh * tc * o * (1.0 - o);
        dc_next[j] = dc * f;
      }
      dh_next = dz.row(t) * wh;
      if (has_prev) dwh.noalias() += dz.row(t).transpose() * cache.hidden.row(t_prev);
    }
    dwx.noalias() += dz.transpose() * x;
    db += dz.colwise().sum();
    return dz * wx;
  }

 private:
  int in_ = 0;
  int hidden_ = 0;
  bool reverse_ = false;
  int wx_ = -1;
  int wh_ = -1;
  int bias_ = -1;
};

// Bidirectional layer; output rows are [forward | backward].
class BiLstm {
 public:
  struct Cache {
    Lstm::Cache fwd;
    Lstm::Cache bwd;
  };

  BiLstm() = default;
  BiLstm(ParameterStore* store, const std::string& name, int in,
         int output_width, Rng* rng) {
    Require(output_width % 2 == 0, "bidirectional width must be even");
    fwd_ = Lstm(store, name + ".fwd", in, output_width / 2, false, rng);
    bwd_ = Lstm(store, name + ".bwd", in, output_width / 2, true, rng);
  }

  RowMatrix Forward(const ParameterStore& store, const RowMatrix& x,
                    Cache* cache) const {
    const RowMatrix a = fwd_.Forward(store, x, &cache->fwd);
    const RowMatrix b = bwd_.Forward(store, x, &cache->bwd);
    RowMatrix out(x.rows(), a.cols() + b.cols());
    out << a, b;
    return out;
  }

  RowMatrix Backward(const ParameterStore& store, const RowMatrix& x,
                     const Cache& cache, const RowMatrix& dy,
                     Gradients* grads) const {
    const int h = fwd_.hidden();
    RowMatrix dx = fwd_.Backward(store, x, cache.fwd, dy.leftCols(h), grads);
    dx += bwd_.Backward(store, x, cache.bwd, dy.rightCols(h), grads);
    return dx;
  }

 private:
  Lstm fwd_;
  Lstm bwd_;
};

}  // namespace dplm::nn

#endif  // DPLM_NN_LSTM_H_
