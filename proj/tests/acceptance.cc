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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Trains the desk-scale static and moving
// models, so a full run takes roughly 20 minutes on one core.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "dplm/audio/angles.h"
#include "dplm/audio/spatialize.h"
#include "dplm/audio/synth.h"
#include "dplm/core/random.h"
#include "dplm/cues/cues.h"
#include "dplm/eval/evaluation.h"
#include "dplm/eval/stats.h"
#include "dplm/metric/deep_feature_distance.h"
#include "dplm/model/checkpoint.h"
#include "dplm/pipeline/experiment.h"
#include "dplm/pipeline/runs.h"
#include "dplm/training/loss.h"
#include "dplm/training/trainer.h"

namespace dplm {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a sub-check; the first failing one is named in the detail.
  void Check(bool ok, const std::string& what) {
    if (!ok && pass) detail << "failed: " << what << "; ";
    pass = pass && ok;
  }
};

std::string Fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

void Log(const std::string& msg) { std::cerr << "[acceptance] " << msg << "\n"; }

// ---------------------------------------------------------------------------

Outcome HaversineSuite() {
  Outcome o;
  const auto t0 = Clock::now();
  const SourceLocation p = SourceLocation::FromDegrees(20, 10);
  o.Check(Haversine(p, p) == 0.0, "identity");
  const double anti = Haversine(SourceLocation::FromDegrees(0, 0),
                                SourceLocation::FromDegrees(180, 0));
  o.Check(std::abs(anti - kPi) <= 1e-9, "antipodal");
  const double pole = Haversine(SourceLocation::FromDegrees(0, 0),
                                SourceLocation::FromDegrees(0, 90));
  o.Check(std::abs(pole - kPi / 2) <= 1e-9, "equator to pole");
  const double quarter = Haversine(SourceLocation::FromDegrees(0, 0),
                                   SourceLocation::FromDegrees(90, 0));
  o.Check(std::abs(quarter - kPi / 2) <= 1e-9, "quarter circle");
  Rng rng(1);
  double max_asym = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const SourceLocation a(rng.Uniform(-kPi, kPi), rng.Uniform(-kPi / 2, kPi / 2));
    const SourceLocation b(rng.Uniform(-kPi, kPi), rng.Uniform(-kPi / 2, kPi / 2));
    max_asym = std::max(max_asym, std::abs(Haversine(a, b) - Haversine(b, a)));
  }
  o.Check(max_asym <= 1e-9, "symmetry");
  const double sec = Seconds(t0);
  o.Check(sec < 1.0, "runtime");
  o.detail << "antipodal err " << Fmt(std::abs(anti - kPi)) << ", max asymmetry "
           << Fmt(max_asym) << ", " << Fmt(sec * 1e3, 3) << " ms";
  return o;
}

Outcome LossSuite() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(2);
  double max_ce_err = 0.0;
  for (int i = 0; i < 500; ++i) {
    const int k = 2 + static_cast<int>(rng.Index(49));
    std::vector<double> p(k);
    double sum = 0.0;
    for (double& v : p) sum += (v = rng.Uniform(0.01, 1.0));
    for (double& v : p) v /= sum;
    const int y = static_cast<int>(rng.Index(k));
    max_ce_err = std::max(max_ce_err,
                          std::abs(LabelSmoothedCe({y, 0.0, k}, p) + std::log(p[y])));
  }
  o.Check(max_ce_err <= 1e-9, "alpha=0 equals cross-entropy");
  double max_uniform_err = 0.0;
  for (int k : {2, 3, 10, 50}) {
    const std::vector<double> p(k, 1.0 / k);
    for (double alpha : {0.0, 0.1, 0.25}) {
      max_uniform_err = std::max(
          max_uniform_err, std::abs(LabelSmoothedCe({0, alpha, k}, p) - std::log(k)));
    }
  }
  o.Check(max_uniform_err <= 1e-9, "uniform gives log K");

  // Grid search over the K=3 simplex.
  const double step = 0.001;
  const int n = 1000;
  const ClassTarget target{1, 0.25, 3};
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> arg;
  for (int a = 0; a <= n; ++a) {
    for (int b = 0; a + b <= n; ++b) {
      const std::vector<double> p = {a * step, b * step, (n - a - b) * step};
      const double l = LabelSmoothedCe(target, p);
      if (l < best) {
        best = l;
        arg = p;
      }
    }
  }
  double max_dev = 0.0;
  for (int i = 0; i < 3; ++i) {
    max_dev = std::max(max_dev, std::abs(arg[i] - target.weight(i)));
  }
  o.Check(max_dev <= step, "grid-search minimizer");
  const double sec = Seconds(t0);
  o.Check(sec < 5.0, "runtime");
  o.detail << "CE err " << Fmt(max_ce_err) << ", log K err " << Fmt(max_uniform_err)
           << ", minimizer dev " << Fmt(max_dev) << " (grid " << step << "), "
           << Fmt(sec, 3) << " s";
  return o;
}

double CombinedLossGradError(Rng* rng, Variant variant, bool with_el) {
  BinGrid grid;
  grid.n_azimuth = 12;
  grid.n_elevation = 5;
  const int frames = 1 + static_cast<int>(rng->Index(4));
  auto logits = [&](int k) {
    nn::RowMatrix m(frames, k);
    for (int i = 0; i < m.size(); ++i) m.data()[i] = 2.0 * rng->Normal();
    return m;
  };
  nn::RowMatrix az = logits(grid.n_azimuth), el = logits(grid.n_elevation);
  nn::RowMatrix* el_ptr = with_el ? &el : nullptr;
  std::vector<FrameTruth> truths;
  for (int i = 0; i < (variant == Variant::kMoving ? frames : 1); ++i) {
    truths.push_back(MakeTruth(
        SourceLocation(rng->Uniform(-kPi, kPi), with_el ? rng->Uniform(-1.2, 1.2) : 0.0),
        grid));
  }
  const LossResult r = CombinedLoss(az, el_ptr, truths, variant, 0.25, grid);
  double num = 0.0, den = 0.0;
  auto check = [&](nn::RowMatrix* m, const nn::RowMatrix& g) {
    for (int i = 0; i < m->size(); ++i) {
      const double keep = m->data()[i], eps = 1e-6;
      m->data()[i] = keep + eps;
      const double up = CombinedLoss(az, el_ptr, truths, variant, 0.25, grid).total;
      m->data()[i] = keep - eps;
      const double down = CombinedLoss(az, el_ptr, truths, variant, 0.25, grid).total;
      m->data()[i] = keep;
      const double fd = (up - down) / (2 * eps);
      num += (g.data()[i] - fd) * (g.data()[i] - fd);
      den += std::max(g.data()[i] * g.data()[i], fd * fd);
    }
  };
  check(&az, r.d_azimuth_logits);
  if (with_el) check(&el, r.d_elevation_logits);
  return std::sqrt(num / den);
}

// Relative error of the metric gradient on a 0.5 s probe, over sampled
// coordinates and along one random direction.
// Central difference of f at 0. Principal-phase wrapping and the L1 and
// activation kinks make the distance only piecewise smooth, so the step
// shrinks until two successive estimates agree.
template <typename F>
double StableCentralDifference(const F& f, double h = 1e-8) {
  double fd = (f(h) - f(-h)) / (2 * h);
  for (int i = 0; i < 4; ++i) {
    h /= 4;
    const double finer = (f(h) - f(-h)) / (2 * h);
    const bool agree = std::abs(finer - fd) <= 1e-4 * std::abs(finer);
    fd = finer;
    if (agree) break;
  }
  return fd;
}

double MetricGradError(const DeepFeatureMetric& metric, const BinauralSignal& x1,
                       const BinauralSignal& x2, Rng* rng) {
  const auto g = metric.DistanceGradient(x1, x2);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 24; ++i) {
    const int ch = static_cast<int>(rng->Index(2));
    const std::size_t n = rng->Index(x1.size());
    const double fd = StableCentralDifference([&](double s) {
      std::vector<double> l = x1.left(), r = x1.right();
      (ch == 0 ? l : r)[n] += s;
      return metric.Distance(BinauralSignal(l, r), x2).distance;
    });
    const double an = g.d_x1.channel(ch)[n];
    num += (an - fd) * (an - fd);
    den += fd * fd;
  }
  const double coord = std::sqrt(num / den);

  std::vector<double> dl(x1.size()), dr(x1.size());
  for (std::size_t i = 0; i < x1.size(); ++i) {
    dl[i] = rng->Normal();
    dr[i] = rng->Normal();
  }
  auto shifted = [&](double s) {
    std::vector<double> l = x1.left(), r = x1.right();
    for (std::size_t i = 0; i < l.size(); ++i) {
      l[i] += s * dl[i];
      r[i] += s * dr[i];
    }
    return metric.Distance(BinauralSignal(l, r), x2).distance;
  };
  const double fd = StableCentralDifference(shifted);
  double an = 0.0;
  for (std::size_t i = 0; i < x1.size(); ++i) {
    an += g.d_x1.left()[i] * dl[i] + g.d_x1.right()[i] * dr[i];
  }
  return std::max(coord, std::abs(an - fd) / std::abs(fd));
}

BinauralSignal Render(std::uint64_t seed, double az_deg, double sec) {
  return SpatializeParametric(
      SynthesizeSource(seed, static_cast<std::size_t>(sec * kCanonicalSampleRate)),
      SourceLocation::FromDegrees(az_deg));
}

Outcome GradientSuite(std::shared_ptr<const DoaModel> model) {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(3);
  double loss_err = 0.0;
  int instances = 0;
  for (Variant v : {Variant::kStatic, Variant::kMoving}) {
    for (bool el : {false, true}) {
      for (int i = 0; i < 12; ++i, ++instances) {
        loss_err = std::max(loss_err, CombinedLossGradError(&rng, v, el));
      }
    }
  }
  o.Check(loss_err < 1e-4, "combined-loss gradient");
  double metric_err = 0.0;
  const DeepFeatureMetric strict(model, {{}, Alignment::kStrictEqualLength});
  const DeepFeatureMetric pooled(model, {{}, Alignment::kTimePooled});
  metric_err = std::max(metric_err, MetricGradError(strict, Render(11, 35, 0.5),
                                                    Render(12, -20, 0.5), &rng));
  metric_err = std::max(metric_err, MetricGradError(strict, Render(13, -60, 0.5),
                                                    Render(13, 10, 0.5), &rng));
  metric_err = std::max(metric_err, MetricGradError(pooled, Render(14, 70, 0.5),
                                                    Render(15, 0, 0.4), &rng));
  o.Check(metric_err < 1e-3, "metric gradient");
  const double sec = Seconds(t0);
  o.Check(sec < 120.0, "runtime");
  o.detail << "loss rel err " << Fmt(loss_err) << " over " << instances
           << " instances, metric rel err " << Fmt(metric_err)
           << " on 3 probes of 0.5 s, " << Fmt(sec, 3) << " s";
  return o;
}

Outcome MetricAxioms(std::shared_ptr<const DoaModel> model) {
  Outcome o;
  const DeepFeatureMetric metric(model, {});
  for (double az : {-75.0, 0.0, 40.0}) {
    const BinauralSignal x = Render(21, az, 0.5);
    o.Check(metric.Distance(x, x).distance == 0.0, "identity");
  }
  Rng rng(4);
  auto noise = [&](std::size_t n) {
    std::vector<double> l(n), r(n);
    for (std::size_t i = 0; i < n; ++i) {
      l[i] = 0.1 * rng.Normal();
      r[i] = 0.1 * rng.Normal();
    }
    return BinauralSignal(l, r);
  };
  double min_d = std::numeric_limits<double>::infinity();
  int asymmetric = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n1 = 1024 + 512 * rng.Index(8);
    const std::size_t n2 = i % 2 ? n1 : 1024 + 512 * rng.Index(8);
    const BinauralSignal a = noise(n1), b = noise(n2);
    const double d = metric.Distance(a, b).distance;
    min_d = std::min(min_d, d);
    if (i < 20 && d != metric.Distance(b, a).distance) ++asymmetric;
  }
  o.Check(min_d >= 0.0, "non-negativity");
  o.Check(asymmetric == 0, "symmetry");
  const std::vector<BinauralSignal> signals = {Render(22, -45, 0.5), Render(22, 0, 0.5),
                                               Render(23, 30, 0.5), Render(24, 80, 0.4)};
  const auto m = metric.DistanceMatrix(signals);
  int mismatches = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double want =
          i == j ? 0.0 : metric.Distance(signals[i], signals[j]).distance;
      mismatches += m[i][j] != want;
    }
  }
  o.Check(mismatches == 0, "distance matrix");
  o.detail << "min distance over 100 random pairs " << Fmt(min_d)
           << ", asymmetric pairs " << asymmetric << "/20, matrix mismatches "
           << mismatches << "/16";
  return o;
}

// Fresh corpus from an unrelated seed: none of its sources, noises or SNRs
// were seen in training or model selection.
double HeldOutRmse(const DoaModel& model, const ExperimentConfig& cfg,
                   std::uint64_t seed, int records) {
  SyntheticDatasetOptions opts = CorpusOptions(cfg);
  opts.seed = seed;
  opts.n_records = records;
  const auto manifest = MakeSyntheticManifest(opts);
  const DatasetRenderer renderer({}, RenderOptionsFor(cfg));
  std::vector<Example> examples;
  for (const auto& r : manifest) {
    examples.push_back(renderer.MakeExample(r, model.config().variant, model.config().grid));
  }
  return EvaluateExamples(model, examples, cfg.train.alpha).rmse_deg;
}

struct TrainedModel {
  std::shared_ptr<const DoaModel> model;
  ExperimentConfig cfg;
  TrainResult result;
  double train_sec = 0.0;
  double held_out_rmse = 0.0;
};

TrainedModel TrainDesk(Variant variant) {
  TrainedModel t;
  t.cfg = ExperimentConfig::Desk();
  t.cfg.seed = 1;
  t.cfg.model.variant = variant;
  const auto t0 = Clock::now();
  TrainingRun run = RunTraining(t.cfg, [&](const EpochMetrics& m) {
    Log(std::string(VariantName(variant)) + " epoch " + std::to_string(m.epoch) +
        " val_rmse " + Fmt(m.val_rmse_deg) + " deg, " + Fmt(Seconds(t0), 4) + " s");
  });
  t.train_sec = Seconds(t0);
  t.result = run.result;
  t.model = std::shared_ptr<const DoaModel>(std::move(run.model));
  t.held_out_rmse = HeldOutRmse(*t.model, t.cfg, 0x5eed0001ULL, 200);
  return t;
}

Outcome DeskTraining(const TrainedModel& t) {
  Outcome o;
  o.Check(t.held_out_rmse < 20.0, "held-out RMSE below 20 deg");
  o.Check(t.train_sec <= 1800.0, "training time");
  o.detail << "static model, " << t.cfg.corpus.n_classes << " azimuth classes, "
           << t.cfg.corpus.n_records << " records: held-out folded RMSE "
           << Fmt(t.held_out_rmse) << " deg on 200 unseen recordings (validation "
           << Fmt(t.result.best_val_rmse_deg) << " deg at epoch " << t.result.best_epoch
           << "), trained in " << Fmt(t.train_sec, 4) << " s";
  return o;
}

const std::vector<double> kSweepAzimuths = {-90, -75, -60, -45, -30, -15, 0,
                                            15,  30,  45,  60,  75,  90};
const std::vector<double> kReferences = {-90, -30, 30, 90};

std::vector<double> SweepCorrelations(std::shared_ptr<const DoaModel> model) {
  const DeepFeatureMetric metric(model, {});
  const auto render = ParametricRenderer(SynthesizeSource(31, kCanonicalSampleRate));
  std::vector<double> out;
  for (double ref : kReferences) {
    const SweepResult r = AngularSweep(metric, ref, kSweepAzimuths, render);
    out.push_back(r.spearman.value_or(std::numeric_limits<double>::quiet_NaN()));
  }
  return out;
}

Outcome Monotonicity(const TrainedModel& stat, const TrainedModel& mov) {
  Outcome o;
  const auto t0 = Clock::now();
  const auto sc = SweepCorrelations(stat.model);
  const double sec = Seconds(t0);
  for (std::size_t i = 0; i < sc.size(); ++i) {
    o.Check(sc[i] >= 0.7, "reference " + Fmt(kReferences[i]));
  }
  o.Check(sec < 300.0, "runtime");
  const auto sc_mov = SweepCorrelations(mov.model);
  o.detail << "static-model SC";
  for (std::size_t i = 0; i < sc.size(); ++i) {
    o.detail << " " << Fmt(kReferences[i]) << ":" << Fmt(sc[i], 3);
  }
  o.detail << " (moving model";
  for (double v : sc_mov) o.detail << " " << Fmt(v, 3);
  o.detail << "), " << Fmt(sec, 3) << " s";
  return o;
}

Outcome Framewise(const TrainedModel& stat, const TrainedModel& mov) {
  Outcome o;
  const Trajectory traj = IntervalTrajectory({-60, 0, 60}, 1.5);
  for (std::uint64_t seed : {41, 42, 43}) {
    const BinauralSignal x = SpatializeParametric(
        SynthesizeSource(seed, static_cast<std::size_t>(1.5 * kCanonicalSampleRate)),
        traj);
    const FramewiseReport r = FramewiseComparison(*stat.model, *mov.model, x, traj);
    o.Check(r.rmse_moving_deg < r.rmse_static_whole_deg,
            "moving beats static, source " + std::to_string(seed));
    o.Check(r.rmse_static_interval_deg < r.rmse_static_whole_deg,
            "per-interval beats whole, source " + std::to_string(seed));
    o.detail << "source " << seed << ": moving " << Fmt(r.rmse_moving_deg, 3)
             << ", static whole " << Fmt(r.rmse_static_whole_deg, 3)
             << ", static per-interval " << Fmt(r.rmse_static_interval_deg, 3)
             << " deg; ";
  }
  return o;
}

std::vector<double> CircularDelay(const std::vector<double>& x, double d) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, x);
  const std::size_t n = x.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double f = k <= n / 2 ? static_cast<double>(k)
                                : static_cast<double>(k) - static_cast<double>(n);
    spectrum[k] *= std::polar(1.0, -2.0 * std::numbers::pi * f * d / n);
  }
  if (n % 2 == 0) spectrum[n / 2] = spectrum[n / 2].real();
  std::vector<double> y;
  fft.inv(y, spectrum);
  return y;
}

Outcome CueBaseline() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(5);
  std::vector<double> s(kCanonicalSampleRate);
  for (double& v : s) v = 0.1 * rng.Normal();
  auto itd_samples = [&](double d) {
    const auto delayed = CircularDelay(s, std::abs(d));
    const BinauralSignal x =
        d >= 0 ? BinauralSignal(s, delayed) : BinauralSignal(delayed, s);
    return SummarizeCues(ExtractCues(x)).itd_s * kCanonicalSampleRate;
  };
  double int_err = 0.0, frac_err = 0.0;
  for (int d = -16; d <= 16; ++d) int_err = std::max(int_err, std::abs(itd_samples(d) - d));
  for (double d = -15.75; d < 16; d += 1.3) {
    frac_err = std::max(frac_err, std::abs(itd_samples(d) - d));
  }
  o.Check(int_err <= 1.0, "integer ITD");
  o.Check(frac_err < 0.2, "fractional ITD");
  double ild_err = 0.0;
  for (double gain : {1.0, 0.5, 0.25, 0.8, 1.9}) {
    std::vector<double> r(s);
    for (double& v : r) v *= gain;
    const double want = -20.0 * std::log10(gain);
    ild_err = std::max(ild_err,
                       std::abs(SummarizeCues(ExtractCues(BinauralSignal(s, r))).ild_db - want));
  }
  o.Check(ild_err <= 0.01, "ILD");
  const double iacc = SummarizeCues(ExtractCues(BinauralSignal(s, s))).iacc;
  o.Check(std::abs(iacc - 1.0) <= 1e-9, "IACC");
  const double sec = Seconds(t0);
  o.Check(sec < 10.0, "runtime");
  o.detail << "integer ITD err " << Fmt(int_err) << " samples, fractional "
           << Fmt(frac_err) << " samples, ILD err " << Fmt(ild_err) << " dB, IACC "
           << Fmt(iacc, 12) << ", " << Fmt(sec, 3) << " s";
  return o;
}

std::vector<double> CountingRanks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    int less = 0, equal = 0;
    for (double w : v) {
      less += w < v[i];
      equal += w == v[i];
    }
    r[i] = 1.0 + less + (equal - 1) / 2.0;
  }
  return r;
}

double OracleSpearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = CountingRanks(a), rb = CountingRanks(b);
  const long double n = a.size();
  long double sa = 0, sb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += ra[i];
    sb += rb[i];
  }
  long double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - sa / n) * (rb[i] - sb / n);
    saa += (ra[i] - sa / n) * (ra[i] - sa / n);
    sbb += (rb[i] - sb / n) * (rb[i] - sb / n);
  }
  return static_cast<double>(sab / std::sqrt(saa * sbb));
}

Outcome SpearmanOracle() {
  Outcome o;
  Rng rng(6);
  int compared = 0, rank_mismatch = 0;
  double max_err = 0.0;
  while (compared < 1000) {
    const std::size_t n = 3 + rng.Index(40);
    const int levels = 2 + static_cast<int>(rng.Index(compared % 2 ? 5 : 1000));
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<double>(rng.Index(levels));
      b[i] = static_cast<double>(rng.Index(levels));
    }
    const auto ra = AverageRanks(a), rb = AverageRanks(b);
    auto constant = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
    };
    if (constant(a) || constant(b)) continue;
    rank_mismatch += ra != CountingRanks(a) || rb != CountingRanks(b);
    max_err = std::max(max_err, std::abs(Spearman(a, b) - OracleSpearman(a, b)));
    ++compared;
  }
  o.Check(rank_mismatch == 0, "tied ranks");
  o.Check(max_err <= 1e-12, "correlation");
  o.detail << compared << " random vectors with ties: rank mismatches " << rank_mismatch
           << ", max |SC - oracle| " << Fmt(max_err);
  return o;
}

Outcome Determinism() {
  Outcome o;
  ExperimentConfig cfg = ExperimentConfig::Desk();
  cfg.seed = 17;
  cfg.model.base_filters = 2;
  cfg.model.lstm_embedding = 8;
  cfg.train.epochs = 3;
  cfg.train.excerpt_sec = 0.25;
  cfg.corpus.n_records = 40;
  std::string csv[2], ckpt[2];
  for (int run = 0; run < 2; ++run) {
    TrainingRun r = RunTraining(cfg);
    csv[run] = r.metrics_csv;
    ckpt[run] = EncodeCheckpoint(*r.model, r.metadata);
  }
  o.Check(csv[0] == csv[1], "metrics log");
  o.Check(ckpt[0] == ckpt[1], "checkpoint");
  ExperimentConfig other = cfg;
  other.seed = 18;
  const TrainingRun r = RunTraining(other);
  o.Check(EncodeCheckpoint(*r.model, r.metadata) != ckpt[0], "seed sensitivity");
  o.detail << "metrics log " << csv[0].size() << " bytes, checkpoint " << ckpt[0].size()
           << " bytes, identical across two runs";
  return o;
}

// Extra invariant: swapping ears negates the decoded azimuth.
Outcome MirrorSymmetry(const TrainedModel& stat) {
  Outcome o;
  const FeatureExtractor extractor;
  double max_err = 0.0;
  for (double az : {-70.0, -45.0, -20.0, -5.0, 5.0, 20.0, 45.0, 70.0}) {
    const BinauralSignal x = Render(51, az, 1.0);
    auto decode = [&](const BinauralSignal& s) {
      return DecodeDoa(RunModel(*stat.model, extractor.Extract(s), false).frames,
                       stat.model->config().grid, Variant::kStatic)[0]
          .azimuth();
    };
    const double a = FoldFrontBack(decode(x));
    const double b = FoldFrontBack(decode(x.Swapped()));
    max_err = std::max(max_err, std::abs(RadToDeg(a + b)));
  }
  o.Check(max_err <= 5.0, "mirror symmetry");
  o.detail << "max |az(swapped) + az| " << Fmt(max_err) << " deg over 8 directions";
  return o;
}

// Extra check: on a fixed direction the three framewise strategies agree
// within one azimuth bin.
Outcome ConstantDoaAgreement(const TrainedModel& stat, const TrainedModel& mov) {
  Outcome o;
  const double bin_deg = RadToDeg(stat.model->config().grid.azimuth_width());
  double worst = 0.0;
  for (double az : {-40.0, 0.0, 30.0}) {
    const Trajectory traj = Trajectory::Static(SourceLocation::FromDegrees(az), 1.0);
    const BinauralSignal x = Render(61, az, 1.0);
    const FramewiseReport r = FramewiseComparison(*stat.model, *mov.model, x, traj);
    std::vector<double> mov_az;
    for (const auto& l : r.moving) mov_az.push_back(FoldFrontBack(l.azimuth()));
    std::nth_element(mov_az.begin(), mov_az.begin() + mov_az.size() / 2, mov_az.end());
    const double mov_median = RadToDeg(mov_az[mov_az.size() / 2]);
    const double whole = RadToDeg(FoldFrontBack(r.static_whole[0].azimuth()));
    const double interval = RadToDeg(FoldFrontBack(r.static_interval[0].azimuth()));
    worst = std::max({worst, std::abs(whole - interval), std::abs(whole - mov_median)});
  }
  o.Check(worst <= bin_deg, "agreement within a bin");
  o.detail << "max disagreement " << Fmt(worst) << " deg (bin width " << Fmt(bin_deg)
           << " deg, moving model by framewise median)";
  return o;
}

}  // namespace
}  // namespace dplm

int main() {
  using namespace dplm;
  std::vector<std::pair<std::string, Outcome>> results(10);
  auto run = [&](int id, const std::string& name, const std::function<Outcome()>& f) {
    Log("criterion " + std::to_string(id) + ": " + name);
    try {
      results[id - 1] = {name, f()};
    } catch (const std::exception& e) {
      Outcome o;
      o.Check(false, std::string("exception: ") + e.what());
      results[id - 1] = {name, std::move(o)};
    }
  };

  run(1, "haversine suite", HaversineSuite);
  run(2, "label-smoothed cross-entropy suite", LossSuite);
  run(8, "cue baseline", CueBaseline);
  run(9, "Spearman versus brute-force oracle", SpearmanOracle);
  run(10, "determinism", Determinism);

  TrainedModel stat, mov;
  run(5, "desk-scale localization training", [&] {
    stat = TrainDesk(Variant::kStatic);
    return DeskTraining(stat);
  });
  Log("training the moving-source model");
  try {
    mov = TrainDesk(Variant::kMoving);
    Log("moving model held-out framewise RMSE " + Fmt(mov.held_out_rmse) + " deg");
  } catch (const std::exception& e) {
    Log(std::string("moving-model training failed: ") + e.what());
  }
  const bool have_models = stat.model && mov.model;
  auto need_models = [&](const std::function<Outcome()>& f) {
    return [&, f] {
      if (!have_models) {
        Outcome o;
        o.Check(false, "trained models unavailable");
        return o;
      }
      return f();
    };
  };
  run(3, "gradient checks", need_models([&] { return GradientSuite(stat.model); }));
  run(4, "metric axioms", need_models([&] { return MetricAxioms(stat.model); }));
  run(6, "monotonicity with angular separation",
      need_models([&] { return Monotonicity(stat, mov); }));
  run(7, "framewise static versus moving",
      need_models([&] { return Framewise(stat, mov); }));

  int failed = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& [name, o] = results[i];
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << name << ": "
              << o.detail.str() << "\n";
  }
  if (have_models) {
    const Outcome mirror = MirrorSymmetry(stat);
    std::cout << "INFO " << (mirror.pass ? "pass" : "fail")
              << " mirror symmetry: " << mirror.detail.str() << "\n";
    const Outcome agree = ConstantDoaAgreement(stat, mov);
    std::cout << "INFO " << (agree.pass ? "pass" : "fail")
              << " constant-direction framewise agreement: " << agree.detail.str()
              << "\n";
  }
  std::cout << (failed == 0 ? "ALL CRITERIA PASS" : std::to_string(failed) + " CRITERIA FAIL")
            << "\n";
  return failed == 0 ? 0 : 1;
}
