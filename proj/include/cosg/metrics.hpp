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

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cosg/adam.hpp"
#include "cosg/checkpoint.hpp"
#include "cosg/motion.hpp"
#include "cosg/tensor.hpp"

namespace cosg {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Population mean and standard deviation.
MeanStd mean_std(std::span<const double> values);

// ---------------------------------------------------------------------------
// Kinematic statistics. `positions` is T x (3J): joint j occupies columns
// 3j..3j+2. Per frame, the derivative magnitude is averaged over joints;
// the result summarises those per-frame values.

/// Forward third difference scaled by fps^3. Requires T >= 4.
MeanStd average_jerk(const Tensor& positions, double fps);
/// Forward second difference scaled by fps^2. Requires T >= 3.
MeanStd average_acceleration(const Tensor& positions, double fps);

/// Pools per-frame values of several sequences before summarising.
MeanStd average_jerk(std::span<const Tensor> sequences, double fps);
MeanStd average_acceleration(std::span<const Tensor> sequences, double fps);

// ---------------------------------------------------------------------------
// Canonical correlation

struct CcaOptions {
  /// Added to each covariance diagonal, relative to its mean variance.
  double ridge = 1e-6;
};

/// First canonical correlation between frame-aligned X and Y (N x dx, N x dy).
double global_cca(const Tensor& x, const Tensor& y, const CcaOptions& options = {});

struct SequencePair {
  std::string id;
  Tensor x;
  Tensor y;
};

MeanStd cca_per_sequence(std::span<const SequencePair> pairs, const CcaOptions& options = {});

// ---------------------------------------------------------------------------
// Velocity histograms

/// sqrt(1 - sum_i sqrt(p_i q_i)) for probability vectors of equal length.
double hellinger(std::span<const double> p, std::span<const double> q);

/// Mean over feature dimensions of the Hellinger distance between
/// histograms of first differences. Bins span the pooled range of both
/// sets; a dimension with zero range contributes 0.
double hellinger_avg(std::span<const Tensor> a, std::span<const Tensor> b, std::size_t bins = 50);

// ---------------------------------------------------------------------------
// Frechet distance

struct GaussianSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// Sample mean and unbiased covariance of the rows of `samples`.
GaussianSummary fit_gaussian(const Tensor& samples);

/// Symmetric square root with negative eigenvalues clipped to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m);

double frechet_distance(const GaussianSummary& a, const GaussianSummary& b);
double fgd(const Tensor& a, const Tensor& b);

// ---------------------------------------------------------------------------
// Feature-space FGD

struct FgdModelConfig {
  std::size_t window = 30;
  std::size_t stride = 5;
  std::size_t hidden = 300;
  std::size_t code = 64;
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  std::size_t min_windows = 100;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

/// Fixed-length windows of `window` frames every `stride` frames, each
/// flattened to one row.
Tensor flatten_windows(std::span<const Tensor> sequences, std::size_t window, std::size_t stride);

/// Window autoencoder whose bottleneck codes are the feature space for FGD.
/// Inputs are standardised with statistics of the training windows.
class FgdFeatureModel {
 public:
  FgdFeatureModel(std::size_t input_dim, const FgdModelConfig& config);

  /// Trains on windows cut from `sequences` (each T x D). Returns the mean
  /// reconstruction MSE per epoch, preceded by the pre-training value.
  std::vector<double> fit(std::span<const Tensor> sequences);

  /// Codes of every window of `sequences`, one row per window.
  Tensor encode(std::span<const Tensor> sequences) const;
  double reconstruction_mse(const Tensor& windows) const;

  std::size_t code_dim() const { return config_.code; }
  const FgdModelConfig& config() const { return config_; }

  void save(Checkpoint& ck, const std::string& prefix = "fgd/") const;
  static FgdFeatureModel load(const Checkpoint& ck, const FgdModelConfig& config,
                              const std::string& prefix = "fgd/");

 private:
  Tensor standardize(const Tensor& windows) const;

  FgdModelConfig config_;
  std::size_t input_dim_;
  NormStats stats_;
  std::vector<std::unique_ptr<Parameter>> params_;
};

// ---------------------------------------------------------------------------
// Report

struct MetricsReport {
  std::string name;
  MeanStd avg_jerk;
  MeanStd avg_accel;
  double global_cca = 0.0;
  MeanStd cca_per_seq;
  double hellinger_avg = 0.0;
  double fgd_feature = 0.0;
  double fgd_raw = 0.0;
};

struct MetricsOptions {
  CcaOptions cca;
  std::size_t bins = 50;
  double fps = 30.0;
};

/// One evaluated sequence: world joint positions (T x 3J) and the raw
/// gesture feature frames (T x D).
struct MotionSample {
  std::string id;
  Tensor positions;
  Tensor features;
};

MotionSample motion_sample(const std::string& id, const MotionClip& clip);

/// Compares `generated` with `reference`, paired by index and frame-aligned.
/// `feature_model` may be null, in which case fgd_feature is NaN.
MetricsReport evaluate_motion(const std::string& name, std::span<const MotionSample> generated,
                              std::span<const MotionSample> reference, const MetricsOptions& options,
                              const FgdFeatureModel* feature_model);

void write_report_csv(const std::filesystem::path& path, std::span<const MetricsReport> rows);
std::string format_report_table(std::span<const MetricsReport> rows);
/// One horizontal bar chart per metric, stacked in a single SVG document.
void write_report_svg(const std::filesystem::path& path, std::span<const MetricsReport> rows);

}  // namespace cosg
