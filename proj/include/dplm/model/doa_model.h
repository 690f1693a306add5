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

#ifndef DPLM_MODEL_DOA_MODEL_H_
#define DPLM_MODEL_DOA_MODEL_H_

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dplm/audio/stft.h"
#include "dplm/core/error.h"
#include "dplm/core/random.h"
#include "dplm/model/config.h"
#include "dplm/nn/layers.h"
#include "dplm/nn/lstm.h"
#include "dplm/nn/tensor.h"

namespace dplm {

// One captured hidden layer, logically frames x bands x channels. `values` is
// in the layer's native storage order; only elementwise comparisons between
// two stacks of the same model are meaningful.
struct ActivationLayer {
  std::string name;
  int frames = 0;
  int bands = 0;
  int channels = 0;
  std::vector<double> values;
  // Convolutional layers are stored channels x frames x bands; recurrent
  // layers frames x channels.
  bool channel_major = true;

  std::size_t count() const {
    return static_cast<std::size_t>(frames) * bands * channels;
  }
  std::size_t index(int t, int b, int c) const {
    return channel_major
               ? (static_cast<std::size_t>(c) * frames + t) * bands + b
               : static_cast<std::size_t>(t) * channels + c;
  }
};

struct ActivationStack {
  std::vector<ActivationLayer> layers;
};

// GoogLeNet-style block: parallel 1x1, 3x3, 5x5 convolutions and a 3x3
// max-pool followed by a 1x1 projection, each with batch-norm and LeakyReLU,
// concatenated along channels and max-pooled 1x2 along frequency.
class InceptionBlock {
 public:
  static constexpr int kBranches = 4;

  struct Tape {
    std::vector<nn::MaxPool3x3Result> pooled;
    std::array<nn::Batch, kBranches> conv_out;
    std::array<nn::Batch, kBranches> bn_out;
    std::array<nn::BatchNorm::Cache, kBranches> bn;
    std::vector<std::vector<int>> freq_argmax;
    nn::Batch out;
  };

  InceptionBlock() = default;
  InceptionBlock(nn::ParameterStore* store, const std::string& name,
                 int in_channels, int width, double slope, Rng* rng)
      : width_(width), slope_(slope) {
    static constexpr std::array<int, kBranches> kKernels = {1, 3, 5, 1};
    static constexpr std::array<const char*, kBranches> kNames = {
        "conv1x1", "conv3x3", "conv5x5", "pool_proj"};
    for (int b = 0; b < kBranches; ++b) {
      const std::string prefix = name + "." + kNames[b];
      convs_[b] = nn::Conv2d(store, prefix, in_channels, width, kKernels[b],
                             slope, rng);
      norms_[b] = nn::BatchNorm(store, prefix + ".bn", width);
    }
  }

  int out_channels() const { return kBranches * width_; }

  const nn::Batch& Forward(const nn::ParameterStore& store, const nn::Batch& x,
                           bool training, Tape* tape) const {
    const std::size_t n = x.size();
    tape->pooled.clear();
    for (const auto& xi : x) tape->pooled.push_back(nn::MaxPool3x3(xi));
    for (int b = 0; b < kBranches; ++b) {
      auto& conv_out = tape->conv_out[b];
      conv_out.clear();
      for (std::size_t i = 0; i < n; ++i) {
        const nn::Tensor3& in = b == 3 ? tape->pooled[i].out : x[i];
        conv_out.push_back(convs_[b].Forward(store, in));
      }
      tape->bn_out[b] =
          norms_[b].Forward(store, conv_out, training, &tape->bn[b]);
    }
    tape->out.clear();
    tape->freq_argmax.clear();
    for (std::size_t i = 0; i < n; ++i) {
      nn::Tensor3 cat(out_channels(), x[i].frames, x[i].bins);
      const std::size_t block = static_cast<std::size_t>(width_) * cat.plane();
      for (int b = 0; b < kBranches; ++b) {
        const auto& src = tape->bn_out[b][i].data;
        double* dst = cat.data.data() + b * block;
        for (std::size_t k = 0; k < block; ++k) {
          dst[k] = nn::LeakyRelu(src[k], slope_);
        }
      }
      auto pooled = nn::FreqPool(cat);
      tape->out.push_back(std::move(pooled.out));
      tape->freq_argmax.push_back(std::move(pooled.argmax));
    }
    return tape->out;
  }

  // When `dx` is non-null it receives the input gradient.
  void Backward(const nn::ParameterStore& store, const nn::Batch& x,
                const Tape& tape, const nn::Batch& dout, nn::Batch* dx,
                nn::Gradients* grads) const {
    const std::size_t n = x.size();
    std::array<nn::Batch, kBranches> d_bn_out;
    for (int b = 0; b < kBranches; ++b) d_bn_out[b].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      nn::Tensor3 dcat(out_channels(), x[i].frames, x[i].bins);
      nn::ScatterArgmax(tape.freq_argmax[i], dout[i], &dcat);
      const std::size_t block = static_cast<std::size_t>(width_) * dcat.plane();
      for (int b = 0; b < kBranches; ++b) {
        const auto& pre = tape.bn_out[b][i].data;
        nn::Tensor3 d(width_, x[i].frames, x[i].bins);
        const double* src = dcat.data.data() + b * block;
        for (std::size_t k = 0; k < block; ++k) {
          d.data[k] = src[k] * nn::LeakyReluGrad(pre[k], slope_);
        }
        d_bn_out[b][i] = std::move(d);
      }
    }
    if (dx != nullptr) {
      dx->clear();
      for (const auto& xi : x) {
        dx->emplace_back(xi.channels, xi.frames, xi.bins);
      }
    }
    for (int b = 0; b < kBranches; ++b) {
      nn::Batch d_conv;
      norms_[b].Backward(store, tape.conv_out[b], d_bn_out[b], tape.bn[b],
                         &d_conv, grads);
      for (std::size_t i = 0; i < n; ++i) {
        if (b == 3) {
          if (dx != nullptr) {
            nn::Tensor3 d_pooled(x[i].channels, x[i].frames, x[i].bins);
            convs_[b].Backward(store, tape.pooled[i].out, d_conv[i], &d_pooled,
                               grads);
            nn::ScatterArgmax(tape.pooled[i].argmax, d_pooled, &(*dx)[i]);
          } else {
            convs_[b].Backward(store, tape.pooled[i].out, d_conv[i], nullptr,
                               grads);
          }
        } else {
          convs_[b].Backward(store, x[i], d_conv[i],
                             dx != nullptr ? &(*dx)[i] : nullptr, grads);
        }
      }
    }
  }

  void UpdateRunningStats(nn::ParameterStore* store, const Tape& tape,
                          double momentum) const {
    for (int b = 0; b < kBranches; ++b) {
      norms_[b].UpdateRunningStats(store, tape.bn[b], momentum);
    }
  }

 private:
  int width_ = 0;
  double slope_ = 0.01;
  std::array<nn::Conv2d, kBranches> convs_;
  std::array<nn::BatchNorm, kBranches> norms_;
};

// Per-sample head outputs, frames x classes.
struct ModelOutput {
  std::vector<nn::RowMatrix> azimuth_logits;
  std::vector<nn::RowMatrix> elevation_logits;  // empty for azimuth-only
};

// Extra gradients injected at the capture points during backward, in the
// same layout as the captured ActivationLayer values. Empty vectors mean none.
struct CaptureGradients {
  std::vector<std::vector<double>> layers;
};

// Framewise DOA network: Inception feature block, stacked BiLSTM temporal
// aggregation and per-frame linear classification heads. Time resolution is
// preserved end to end, so output frames align 1:1 with STFT frames.
class DoaModel {
 public:
  struct Tape {
    bool training = false;
    nn::Batch input;
    std::vector<InceptionBlock::Tape> blocks;
    nn::SequenceBatch lstm_in;
    std::vector<std::vector<nn::BiLstm::Cache>> lstm;  // [layer][sample]
    std::vector<nn::SequenceBatch> lstm_out;           // [layer][sample]
  };

  explicit DoaModel(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.Validate();
    Rng rng(cfg_.init_seed);
    int channels = kNumFeatureChannels;
    for (int b = 0; b < cfg_.n_inception_blocks; ++b) {
      blocks_.emplace_back(&store_, "inception" + std::to_string(b + 1),
                           channels, cfg_.base_filters, cfg_.leaky_slope, &rng);
      channels = blocks_.back().out_channels();
    }
    int width = channels * cfg_.output_bins();
    for (int l = 0; l < cfg_.lstm_layers; ++l) {
      lstms_.emplace_back(&store_, "bilstm" + std::to_string(l + 1), width,
                          cfg_.lstm_embedding, &rng);
      width = cfg_.lstm_embedding;
    }
    azimuth_head_ =
        nn::Linear(&store_, "head.azimuth", width, cfg_.grid.n_azimuth, &rng);
    if (cfg_.heads == Heads::kAzimuthAndElevation) {
      elevation_head_ = nn::Linear(&store_, "head.elevation", width,
                                   cfg_.grid.n_elevation, &rng);
    }
  }

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterStore& parameters() { return store_; }
  const nn::ParameterStore& parameters() const { return store_; }
  bool has_elevation() const { return cfg_.heads == Heads::kAzimuthAndElevation; }

  // Names of the layers exposed for the deep-feature distance.
  std::vector<std::string> CaptureLayerNames() const {
    std::vector<std::string> names;
    for (int b = 0; b < cfg_.n_inception_blocks; ++b) {
      names.push_back("inception" + std::to_string(b + 1));
    }
    for (int l = 0; l < cfg_.lstm_layers; ++l) {
      names.push_back("bilstm" + std::to_string(l + 1));
    }
    return names;
  }

  static nn::Tensor3 ToTensor(const FeatureTensor& feat) {
    nn::Tensor3 t(feat.channels, feat.frames, feat.bins);
    t.data.assign(feat.data.begin(), feat.data.end());
    return t;
  }

  ModelOutput Forward(const nn::Batch& input, bool training,
                      Tape* tape) const {
    Require(!input.empty(), "empty batch");
    for (const auto& x : input) {
      if (x.channels != kNumFeatureChannels || x.bins != cfg_.input_bins) {
        Fail(ErrorCode::kShapeMismatch,
             "feature shape does not match the model input (" +
                 std::to_string(x.bins) + " bins, expected " +
                 std::to_string(cfg_.input_bins) + ")");
      }
      if (x.frames < 1) Fail(ErrorCode::kShapeMismatch, "no feature frames");
    }
    tape->training = training;
    tape->input = input;
    tape->blocks.assign(blocks_.size(), {});
    const nn::Batch* current = &tape->input;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      current = &blocks_[b].Forward(store_, *current, training, &tape->blocks[b]);
    }
    const std::size_t n = input.size();
    tape->lstm_in.clear();
    for (const auto& x : *current) tape->lstm_in.push_back(Flatten(x));
    tape->lstm.assign(lstms_.size(), std::vector<nn::BiLstm::Cache>(n));
    tape->lstm_out.assign(lstms_.size(), nn::SequenceBatch(n));
    for (std::size_t l = 0; l < lstms_.size(); ++l) {
      for (std::size_t i = 0; i < n; ++i) {
        const nn::RowMatrix& in =
            l == 0 ? tape->lstm_in[i] : tape->lstm_out[l - 1][i];
        tape->lstm_out[l][i] = lstms_[l].Forward(store_, in, &tape->lstm[l][i]);
      }
    }
    ModelOutput out;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& h = tape->lstm_out.back()[i];
      out.azimuth_logits.push_back(azimuth_head_.Forward(store_, h));
      if (has_elevation()) {
        out.elevation_logits.push_back(elevation_head_.Forward(store_, h));
      }
    }
    return out;
  }

  ActivationStack Capture(const Tape& tape, std::size_t sample) const {
    ActivationStack stack;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const nn::Tensor3& t = tape.blocks[b].out[sample];
      stack.layers.push_back({"inception" + std::to_string(b + 1), t.frames,
                              t.bins, t.channels,
                              std::vector<double>(t.data.begin(), t.data.end())});
    }
    for (std::size_t l = 0; l < lstms_.size(); ++l) {
      const nn::RowMatrix& h = tape.lstm_out[l][sample];
      stack.layers.push_back(
          {"bilstm" + std::to_string(l + 1), static_cast<int>(h.rows()), 1,
           static_cast<int>(h.cols()),
           std::vector<double>(h.data(), h.data() + h.size()), false});
    }
    return stack;
  }

  // Backward pass. `d_azimuth`/`d_elevation` hold dL/dlogits per sample (may
  // be empty to skip the heads); `inject[i]` optionally adds gradients at the
  // capture points of sample i. Returns dL/dinput per sample when requested.
  std::optional<nn::Batch> Backward(
      const Tape& tape, const std::vector<nn::RowMatrix>& d_azimuth,
      const std::vector<nn::RowMatrix>& d_elevation,
      const std::vector<CaptureGradients>& inject, bool want_input_grad,
      nn::Gradients* grads) const {
    nn::Gradients scratch;
    if (grads == nullptr) {
      scratch = nn::Gradients(store_);
      grads = &scratch;
    }
    const std::size_t n = tape.input.size();
    const std::size_t n_blocks = blocks_.size();
    const std::size_t n_lstm = lstms_.size();
    auto injected = [&](std::size_t i, std::size_t layer)
        -> const std::vector<double>* {
      if (inject.empty() || inject[i].layers.size() <= layer) return nullptr;
      const auto& v = inject[i].layers[layer];
      return v.empty() ? nullptr : &v;
    };

    nn::SequenceBatch d_seq(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& h = tape.lstm_out.back()[i];
      d_seq[i] = nn::RowMatrix::Zero(h.rows(), h.cols());
      if (!d_azimuth.empty()) {
        d_seq[i] += azimuth_head_.Backward(store_, h, d_azimuth[i], grads);
      }
      if (has_elevation() && !d_elevation.empty()) {
        d_seq[i] += elevation_head_.Backward(store_, h, d_elevation[i], grads);
      }
    }
    for (std::size_t l = n_lstm; l-- > 0;) {
      for (std::size_t i = 0; i < n; ++i) {
        if (const auto* g = injected(i, n_blocks + l)) {
          d_seq[i] += Eigen::Map<const nn::RowMatrix>(g->data(), d_seq[i].rows(),
                                                      d_seq[i].cols());
        }
        const nn::RowMatrix& in =
            l == 0 ? tape.lstm_in[i] : tape.lstm_out[l - 1][i];
        d_seq[i] = lstms_[l].Backward(store_, in, tape.lstm[l][i], d_seq[i],
                                      grads);
      }
    }
    nn::Batch d_block(n);
    for (std::size_t i = 0; i < n; ++i) {
      const nn::Tensor3& shape = tape.blocks.back().out[i];
      d_block[i] = Unflatten(d_seq[i], shape.channels, shape.bins);
    }
    for (std::size_t b = n_blocks; b-- > 0;) {
      for (std::size_t i = 0; i < n; ++i) {
        if (const auto* g = injected(i, b)) {
          for (std::size_t k = 0; k < g->size(); ++k) {
            d_block[i].data[k] += (*g)[k];
          }
        }
      }
      const nn::Batch& in = b == 0 ? tape.input : tape.blocks[b - 1].out;
      const bool need_dx = b > 0 || want_input_grad;
      nn::Batch d_in;
      blocks_[b].Backward(store_, in, tape.blocks[b], d_block,
                          need_dx ? &d_in : nullptr, grads);
      d_block = std::move(d_in);
    }
    if (!want_input_grad) return std::nullopt;
    return d_block;
  }

  // Folds training-mode batch statistics into the running estimates.
  void UpdateRunningStats(const Tape& tape, double momentum = 0.1) {
    Require(tape.training, "running stats need a training-mode tape");
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      blocks_[b].UpdateRunningStats(&store_, tape.blocks[b], momentum);
    }
  }

 private:
  // channels x frames x bins -> frames x (channels * bins)
  static nn::RowMatrix Flatten(const nn::Tensor3& x) {
    nn::RowMatrix out(x.frames, x.channels * x.bins);
    for (int c = 0; c < x.channels; ++c) {
      for (int t = 0; t < x.frames; ++t) {
        for (int f = 0; f < x.bins; ++f) out(t, c * x.bins + f) = x.at(c, t, f);
      }
    }
    return out;
  }

  static nn::Tensor3 Unflatten(const nn::RowMatrix& m, int channels, int bins) {
    nn::Tensor3 x(channels, static_cast<int>(m.rows()), bins);
    for (int c = 0; c < channels; ++c) {
      for (int t = 0; t < x.frames; ++t) {
        for (int f = 0; f < bins; ++f) x.at(c, t, f) = m(t, c * bins + f);
      }
    }
    return x;
  }

  ModelConfig cfg_;
  nn::ParameterStore store_;
  std::vector<InceptionBlock> blocks_;
  std::vector<nn::BiLstm> lstms_;
  nn::Linear azimuth_head_;
  nn::Linear elevation_head_;
};

}  // namespace dplm

#endif  // DPLM_MODEL_DOA_MODEL_H_
