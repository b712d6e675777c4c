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

#include "cosg/metrics.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cosg/errors.hpp"
#include "cosg/graph.hpp"
#include "cosg/random.hpp"

namespace cosg {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

void require_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) throw DataError(fmt::format("{}: input contains non-finite values", what));
}

void require_positions(const Tensor& p, std::size_t min_frames, const char* what) {
  if (p.rank() != 2 || p.cols() == 0 || p.cols() % 3 != 0) {
    throw DimensionError(fmt::format("{}: positions must be T x 3J, got {}", what, shape_string(p.shape())));
  }
  if (p.rows() < min_frames) {
    throw DataError(fmt::format("{}: needs at least {} frames, got {}", what, min_frames, p.rows()));
  }
}

// Per-frame mean joint magnitude of a finite-difference stencil applied at
// frames t, t+1, ..., t+k.
std::vector<double> stencil_magnitudes(const Tensor& p, std::span<const double> coeffs, double scale) {
  const std::size_t k = coeffs.size();
  const std::size_t joints = p.cols() / 3;
  std::vector<double> out;
  out.reserve(p.rows() + 1 - k);
  for (std::size_t t = 0; t + k <= p.rows(); ++t) {
    double acc = 0.0;
    for (std::size_t j = 0; j < joints; ++j) {
      double sq = 0.0;
      for (std::size_t a = 0; a < 3; ++a) {
        double d = 0.0;
        for (std::size_t i = 0; i < k; ++i) d += coeffs[i] * p(t + i, 3 * j + a);
        sq += d * d;
      }
      acc += std::sqrt(sq);
    }
    out.push_back(scale * acc / static_cast<double>(joints));
  }
  return out;
}

constexpr double kJerkStencil[] = {-1.0, 3.0, -3.0, 1.0};
constexpr double kAccelStencil[] = {1.0, -2.0, 1.0};

MeanStd pooled(std::span<const Tensor> sequences, std::span<const double> stencil, double scale,
               const char* what) {
  if (sequences.empty()) throw DataError(fmt::format("{}: no sequences", what));
  std::vector<double> all;
  for (const Tensor& s : sequences) {
    require_positions(s, stencil.size(), what);
    const auto v = stencil_magnitudes(s, stencil, scale);
    all.insert(all.end(), v.begin(), v.end());
  }
  return mean_std(all);
}

Eigen::MatrixXd covariance_of(const Tensor& samples, Eigen::VectorXd* mean_out) {
  const auto x = as_matrix(samples);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  if (mean_out) *mean_out = mean.transpose();
  return (centered.transpose() * centered) / static_cast<double>(samples.rows() - 1);
}

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd inv = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

Tensor velocities(const Tensor& s) {
  if (s.rows() < 2) return Tensor(Shape{0, s.cols()});
  Tensor v(s.rows() - 1, s.cols());
  for (std::size_t t = 0; t + 1 < s.rows(); ++t)
    for (std::size_t k = 0; k < s.cols(); ++k) v(t, k) = s(t + 1, k) - s(t, k);
  return v;
}

}  // namespace

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) return {};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / n)};
}

// ---------------------------------------------------------------------------

MeanStd average_jerk(const Tensor& positions, double fps) {
  return average_jerk(std::span<const Tensor>(&positions, 1), fps);
}

MeanStd average_acceleration(const Tensor& positions, double fps) {
  return average_acceleration(std::span<const Tensor>(&positions, 1), fps);
}

MeanStd average_jerk(std::span<const Tensor> sequences, double fps) {
  return pooled(sequences, kJerkStencil, fps * fps * fps, "average_jerk");
}

MeanStd average_acceleration(std::span<const Tensor> sequences, double fps) {
  return pooled(sequences, kAccelStencil, fps * fps, "average_acceleration");
}

// ---------------------------------------------------------------------------

double global_cca(const Tensor& x, const Tensor& y, const CcaOptions& options) {
  if (x.rank() != 2 || y.rank() != 2 || x.rows() != y.rows()) {
    throw DimensionError("global_cca: X " + shape_string(x.shape()) + " and Y " + shape_string(y.shape()) +
                         " are not frame-aligned");
  }
  if (x.rows() <= std::max(x.cols(), y.cols())) {
    throw DataError(fmt::format("global_cca: {} frames do not exceed the feature width {}", x.rows(),
                                std::max(x.cols(), y.cols())));
  }
  require_finite(x, "global_cca");
  require_finite(y, "global_cca");
  const auto xm = as_matrix(x);
  const auto ym = as_matrix(y);
  const Eigen::MatrixXd xc = xm.rowwise() - xm.colwise().mean();
  const Eigen::MatrixXd yc = ym.rowwise() - ym.colwise().mean();
  const double n1 = static_cast<double>(x.rows() - 1);
  Eigen::MatrixXd cxx = xc.transpose() * xc / n1;
  Eigen::MatrixXd cyy = yc.transpose() * yc / n1;
  const Eigen::MatrixXd cxy = xc.transpose() * yc / n1;
  for (auto* c : {&cxx, &cyy}) {
    const double level = c->trace() / static_cast<double>(c->rows());
    if (!(level > 0.0)) throw DataError("global_cca: an input has zero variance in every dimension");
    c->diagonal().array() += options.ridge * level;
  }
  const Eigen::MatrixXd m = inverse_sqrt(cxx) * cxy * inverse_sqrt(cyy);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return std::clamp(svd.singularValues()(0), 0.0, 1.0);
}

MeanStd cca_per_sequence(std::span<const SequencePair> pairs, const CcaOptions& options) {
  if (pairs.empty()) throw DataError("cca_per_sequence: no sequences");
  std::vector<double> values;
  for (const auto& p : pairs) {
    try {
      values.push_back(global_cca(p.x, p.y, options));
    } catch (const DimensionError& e) {
      throw DimensionError("sequence " + p.id + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("sequence " + p.id + ": " + e.what());
    }
  }
  return mean_std(values);
}

// ---------------------------------------------------------------------------

double hellinger(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw DimensionError(fmt::format("hellinger: {} vs {} bins", p.size(), q.size()));
  }
  // Summing squared root differences keeps identical inputs at exactly 0,
  // where 1 - sum(sqrt(p q)) would leave rounding noise under the root.
  double h2 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
    h2 += d * d;
  }
  return std::sqrt(0.5 * h2);
}

double hellinger_avg(std::span<const Tensor> a, std::span<const Tensor> b, std::size_t bins) {
  if (a.empty() || b.empty()) throw DataError("hellinger_avg: both sets must be non-empty");
  if (bins == 0) throw ConfigError("hellinger_avg: bin count must be positive");
  const std::size_t d = a.front().cols();
  std::vector<Tensor> va, vb;
  for (const Tensor& s : a) {
    if (s.cols() != d) throw DimensionError("hellinger_avg: feature widths differ");
    va.push_back(velocities(s));
  }
  for (const Tensor& s : b) {
    if (s.cols() != d) throw DimensionError("hellinger_avg: feature widths differ");
    vb.push_back(velocities(s));
  }
  auto count_rows = [](const std::vector<Tensor>& v) {
    std::size_t n = 0;
    for (const auto& t : v) n += t.rows();
    return n;
  };
  const std::size_t na = count_rows(va), nb = count_rows(vb);
  if (na == 0 || nb == 0) throw DataError("hellinger_avg: sequences need at least two frames");

  double total = 0.0;
  std::vector<double> p(bins), q(bins);
  for (std::size_t k = 0; k < d; ++k) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto* set : {&va, &vb})
      for (const Tensor& v : *set)
        for (std::size_t t = 0; t < v.rows(); ++t) {
          lo = std::min(lo, v(t, k));
          hi = std::max(hi, v(t, k));
        }
    if (!(hi > lo)) continue;
    auto histogram = [&](const std::vector<Tensor>& set, std::vector<double>& h, std::size_t n) {
      std::fill(h.begin(), h.end(), 0.0);
      for (const Tensor& v : set)
        for (std::size_t t = 0; t < v.rows(); ++t) {
          const auto bin = static_cast<std::size_t>((v(t, k) - lo) / (hi - lo) * static_cast<double>(bins));
          h[std::min(bin, bins - 1)] += 1.0;
        }
      for (double& x : h) x /= static_cast<double>(n);
    };
    histogram(va, p, na);
    histogram(vb, q, nb);
    total += hellinger(p, q);
  }
  return total / static_cast<double>(d);
}

// ---------------------------------------------------------------------------

GaussianSummary fit_gaussian(const Tensor& samples) {
  if (samples.rank() != 2 || samples.rows() < 2) {
    throw DataError("fit_gaussian: needs at least two samples, got " + shape_string(samples.shape()));
  }
  require_finite(samples, "fit_gaussian");
  GaussianSummary g;
  g.covariance = covariance_of(samples, &g.mean);
  return g;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double frechet_distance(const GaussianSummary& a, const GaussianSummary& b) {
  if (a.mean.size() != b.mean.size()) {
    throw DimensionError(fmt::format("fgd: feature widths {} and {} differ", a.mean.size(), b.mean.size()));
  }
  const Eigen::MatrixXd ra = psd_sqrt(a.covariance);
  const Eigen::MatrixXd rb = psd_sqrt(b.covariance);
  // tr((ra B ra)^{1/2}) equals the nuclear norm of rb * ra, which avoids a
  // second square root of a possibly rank-deficient product.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rb * ra);
  const double cross = svd.singularValues().sum();
  const double value =
      (a.mean - b.mean).squaredNorm() + a.covariance.trace() + b.covariance.trace() - 2.0 * cross;
  return std::max(0.0, value);
}

double fgd(const Tensor& a, const Tensor& b) { return frechet_distance(fit_gaussian(a), fit_gaussian(b)); }

// ---------------------------------------------------------------------------

Tensor flatten_windows(std::span<const Tensor> sequences, std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0) throw ConfigError("window and stride must be positive");
  if (sequences.empty()) throw DataError("flatten_windows: no sequences");
  const std::size_t d = sequences.front().cols();
  std::vector<double> rows;
  std::size_t count = 0;
  for (const Tensor& s : sequences) {
    if (s.cols() != d) throw DimensionError("flatten_windows: feature widths differ");
    for (std::size_t start = 0; start + window <= s.rows(); start += stride) {
      rows.insert(rows.end(), s.data() + start * d, s.data() + (start + window) * d);
      ++count;
    }
  }
  return Tensor(Shape{count, window * d}, std::move(rows));
}

namespace {

enum FgdLayer { kEnc1, kEnc2, kDec1, kDec2 };
constexpr const char* kFgdNames[] = {"enc1", "enc2", "dec1", "dec2"};

Var dense(Graph& g, const std::vector<std::unique_ptr<Parameter>>& params, FgdLayer layer, Var x) {
  return linear(x, g.parameter(*params[2 * layer]), g.parameter(*params[2 * layer + 1]));
}

Var encode_graph(Graph& g, const std::vector<std::unique_ptr<Parameter>>& params, Var x) {
  return dense(g, params, kEnc2, leaky_relu(dense(g, params, kEnc1, x)));
}

Var decode_graph(Graph& g, const std::vector<std::unique_ptr<Parameter>>& params, Var code) {
  return dense(g, params, kDec2, leaky_relu(dense(g, params, kDec1, code)));
}

}  // namespace

FgdFeatureModel::FgdFeatureModel(std::size_t input_dim, const FgdModelConfig& config)
    : config_(config), input_dim_(input_dim) {
  if (input_dim == 0 || config.window == 0 || config.hidden == 0 || config.code == 0) {
    throw ConfigError("fgd feature model: dimensions must be positive");
  }
  const std::size_t flat = input_dim * config.window;
  const std::pair<std::size_t, std::size_t> dims[] = {
      {flat, config.hidden}, {config.hidden, config.code}, {config.code, config.hidden}, {config.hidden, flat}};
  Rng rng(config.seed);
  for (std::size_t l = 0; l < 4; ++l) {
    const auto [in, out] = dims[l];
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    params_.push_back(std::make_unique<Parameter>(std::string(kFgdNames[l]) + ".w",
                                                  random_uniform({in, out}, -bound, bound, rng)));
    params_.push_back(std::make_unique<Parameter>(std::string(kFgdNames[l]) + ".b", Tensor(Shape{out})));
  }
  stats_.mean = Tensor(Shape{flat});
  stats_.std = Tensor(Shape{flat}, 1.0);
}

Tensor FgdFeatureModel::standardize(const Tensor& windows) const {
  if (windows.cols() != input_dim_ * config_.window) {
    throw DimensionError(fmt::format("fgd feature model: windows have {} values, expected {}", windows.cols(),
                                     input_dim_ * config_.window));
  }
  return normalize(windows, stats_);
}

double FgdFeatureModel::reconstruction_mse(const Tensor& windows) const {
  Graph g;
  const Var x = g.constant(standardize(windows));
  return g.item(mean(square(sub(decode_graph(g, params_, encode_graph(g, params_, x)), x))));
}

std::vector<double> FgdFeatureModel::fit(std::span<const Tensor> sequences) {
  const Tensor windows = flatten_windows(sequences, config_.window, config_.stride);
  if (windows.cols() != input_dim_ * config_.window) {
    throw DimensionError(fmt::format("fgd feature model: sequences have {} features, expected {}",
                                     windows.cols() / config_.window, input_dim_));
  }
  if (windows.rows() < config_.min_windows) {
    throw DataError(fmt::format("fgd feature model: {} windows of {} frames, need at least {}", windows.rows(),
                                config_.window, config_.min_windows));
  }
  stats_ = fit_norm_stats(std::span<const Tensor>(&windows, 1));
  const Tensor data = normalize(windows, stats_);

  std::vector<Parameter*> ptrs;
  for (const auto& p : params_) ptrs.push_back(p.get());
  Adam opt(ptrs, AdamConfig{config_.lr, 0.9, 0.999, 1e-8});
  Rng rng(config_.seed ^ 0x5eedULL);

  std::vector<double> history{reconstruction_mse(windows)};
  std::vector<std::size_t> order(data.rows());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t bs = std::max<std::size_t>(1, config_.batch_size);
  for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double sum_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += bs) {
      const std::size_t end = std::min(order.size(), begin + bs);
      Graph g;
      const Var all = g.constant(data);
      const Var x = gather_rows(all, std::vector<std::size_t>(order.begin() + begin, order.begin() + end));
      const Var loss = mean(square(sub(decode_graph(g, params_, encode_graph(g, params_, x)), x)));
      opt.zero_grad();
      g.backward(loss);
      opt.step();
      sum_loss += g.item(loss) * static_cast<double>(end - begin);
    }
    history.push_back(sum_loss / static_cast<double>(order.size()));
  }
  return history;
}

Tensor FgdFeatureModel::encode(std::span<const Tensor> sequences) const {
  const Tensor windows = flatten_windows(sequences, config_.window, config_.stride);
  if (windows.rows() == 0) {
    throw DataError(fmt::format("fgd feature model: no sequence reaches {} frames", config_.window));
  }
  Graph g;
  return encode_graph(g, params_, g.constant(standardize(windows))).value();
}

void FgdFeatureModel::save(Checkpoint& ck, const std::string& prefix) const {
  for (const auto& p : params_) ck.put(prefix + p->name, p->value);
  ck.put(prefix + "stats.mean", stats_.mean);
  ck.put(prefix + "stats.std", stats_.std);
}

FgdFeatureModel FgdFeatureModel::load(const Checkpoint& ck, const FgdModelConfig& config,
                                      const std::string& prefix) {
  const Tensor& mean_t = ck.at(prefix + "stats.mean");
  if (config.window == 0 || mean_t.size() % config.window != 0) {
    throw DataError("fgd feature model: stored statistics do not match the window length");
  }
  FgdFeatureModel m(mean_t.size() / config.window, config);
  for (auto& p : m.params_) {
    const Tensor& t = ck.at(prefix + p->name);
    if (!t.same_shape(p->value)) {
      throw DataError("fgd feature model: " + p->name + " has shape " + shape_string(t.shape()) + ", expected " +
                      shape_string(p->value.shape()));
    }
    p->value = t;
  }
  m.stats_.mean = mean_t;
  m.stats_.std = ck.at(prefix + "stats.std");
  return m;
}

// ---------------------------------------------------------------------------

MotionSample motion_sample(const std::string& id, const MotionClip& clip) {
  const auto joints = default_gesture_joints();
  const MotionClip normalized = root_normalize(select_joints(clip, joints));
  return {id, forward_kinematics(normalized), gesture_features(normalized).frames};
}

MetricsReport evaluate_motion(const std::string& name, std::span<const MotionSample> generated,
                              std::span<const MotionSample> reference, const MetricsOptions& options,
                              const FgdFeatureModel* feature_model) {
  if (generated.empty()) throw DataError("evaluate: no generated sequences");
  if (generated.size() != reference.size()) {
    throw DataError(fmt::format("evaluate: {} generated vs {} reference sequences", generated.size(),
                                reference.size()));
  }
  std::vector<Tensor> gen_pos, ref_pos, gen_feat, ref_feat;
  std::vector<SequencePair> pairs;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const MotionSample& g = generated[i];
    const MotionSample& r = reference[i];
    if (g.positions.rows() != r.positions.rows() || !g.positions.same_shape(r.positions) ||
        !g.features.same_shape(r.features)) {
      throw DataError(fmt::format("evaluate: {} ({} frames) is not aligned with reference {} ({} frames)", g.id,
                                  g.positions.rows(), r.id, r.positions.rows()));
    }
    gen_pos.push_back(g.positions);
    ref_pos.push_back(r.positions);
    gen_feat.push_back(g.features);
    ref_feat.push_back(r.features);
    pairs.push_back({g.id, g.positions, r.positions});
  }
  MetricsReport rep;
  rep.name = name;
  rep.avg_jerk = average_jerk(gen_pos, options.fps);
  rep.avg_accel = average_acceleration(gen_pos, options.fps);
  rep.global_cca = global_cca(concat_rows(gen_pos), concat_rows(ref_pos), options.cca);
  rep.cca_per_seq = cca_per_sequence(pairs, options.cca);
  rep.hellinger_avg = hellinger_avg(gen_pos, ref_pos, options.bins);
  rep.fgd_raw = fgd(concat_rows(gen_feat), concat_rows(ref_feat));
  rep.fgd_feature = feature_model ? fgd(feature_model->encode(gen_feat), feature_model->encode(ref_feat))
                                  : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

struct Column {
  const char* header;
  const char* label;
  double MetricsReport::*scalar = nullptr;
  MeanStd MetricsReport::*pair = nullptr;
  int precision = 3;
};

const Column kColumns[] = {
    {"avg_jerk", "Average jerk", nullptr, &MetricsReport::avg_jerk, 2},
    {"avg_accel", "Average acceleration", nullptr, &MetricsReport::avg_accel, 2},
    {"global_cca", "Global CCA", &MetricsReport::global_cca, nullptr, 3},
    {"cca_per_seq", "CCA for each sequence", nullptr, &MetricsReport::cca_per_seq, 2},
    {"hellinger_avg", "Hellinger distance average", &MetricsReport::hellinger_avg, nullptr, 3},
    {"fgd_feature", "FGD on feature space", &MetricsReport::fgd_feature, nullptr, 3},
    {"fgd_raw", "FGD on raw data space", &MetricsReport::fgd_raw, nullptr, 3},
};

double headline(const MetricsReport& r, const Column& c) { return c.scalar ? r.*c.scalar : (r.*c.pair).mean; }

std::string cell(const MetricsReport& r, const Column& c) {
  if (c.scalar) return fmt::format("{:.{}f}", r.*c.scalar, c.precision);
  const MeanStd& m = r.*c.pair;
  return fmt::format("{:.{}f} +/- {:.{}f}", m.mean, c.precision, m.std, c.precision);
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

void write_report_csv(const std::filesystem::path& path, std::span<const MetricsReport> rows) {
  auto out = fmt::output_file(path.string());
  out.print("name");
  for (const Column& c : kColumns) {
    if (c.scalar) {
      out.print(",{}", c.header);
    } else {
      out.print(",{0}_mean,{0}_std", c.header);
    }
  }
  out.print("\n");
  for (const MetricsReport& r : rows) {
    out.print("{}", r.name);
    for (const Column& c : kColumns) {
      if (c.scalar) {
        out.print(",{:.9g}", r.*c.scalar);
      } else {
        out.print(",{:.9g},{:.9g}", (r.*c.pair).mean, (r.*c.pair).std);
      }
    }
    out.print("\n");
  }
}

std::string format_report_table(std::span<const MetricsReport> rows) {
  std::vector<std::vector<std::string>> grid;
  grid.push_back({"Name"});
  for (const Column& c : kColumns) grid.back().push_back(c.label);
  for (const MetricsReport& r : rows) {
    grid.push_back({r.name});
    for (const Column& c : kColumns) grid.back().push_back(cell(r, c));
  }
  std::vector<std::size_t> width(grid.front().size(), 0);
  for (const auto& row : grid)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  std::string out;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    for (std::size_t i = 0; i < grid[r].size(); ++i) {
      if (i > 0) out += "  ";
      out += i == 0 ? fmt::format("{:<{}}", grid[r][i], width[i]) : fmt::format("{:>{}}", grid[r][i], width[i]);
    }
    out += '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w;
      out += std::string(total + 2 * (width.size() - 1), '-') + '\n';
    }
  }
  return out;
}

void write_report_svg(const std::filesystem::path& path, std::span<const MetricsReport> rows) {
  constexpr double kLabelWidth = 160.0, kBarWidth = 360.0, kRow = 18.0, kPad = 10.0, kTitle = 22.0;
  const double panel = kTitle + kRow * static_cast<double>(rows.size()) + kPad;
  const double height = panel * static_cast<double>(std::size(kColumns)) + kPad;
  const double width = kLabelWidth + kBarWidth + 120.0;
  auto out = fmt::output_file(path.string());
  out.print(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{:.0f}" height="{:.0f}" font-family="sans-serif" font-size="12">)"
            "\n",
            width, height);
  double y = kPad;
  for (const Column& c : kColumns) {
    double peak = 0.0;
    for (const MetricsReport& r : rows)
      if (std::isfinite(headline(r, c))) peak = std::max(peak, std::abs(headline(r, c)));
    out.print(R"(<text x="{:.1f}" y="{:.1f}" font-weight="bold">{}</text>)" "\n", kPad, y + 14.0, c.label);
    double row_y = y + kTitle;
    for (const MetricsReport& r : rows) {
      const double v = headline(r, c);
      const double len = std::isfinite(v) && peak > 0.0 ? kBarWidth * std::abs(v) / peak : 0.0;
      out.print(R"(<text x="{:.1f}" y="{:.1f}">{}</text>)" "\n", kPad, row_y + 12.0, xml_escape(r.name));
      out.print(R"(<rect x="{:.1f}" y="{:.1f}" width="{:.2f}" height="{:.1f}" fill="#4C72B0"/>)" "\n",
                kLabelWidth, row_y + 2.0, len, kRow - 4.0);
      out.print(R"(<text x="{:.1f}" y="{:.1f}">{}</text>)" "\n", kLabelWidth + len + 6.0, row_y + 12.0,
                cell(r, c));
      row_y += kRow;
    }
    y += panel;
  }
  out.print("</svg>\n");
}

}  // namespace cosg
