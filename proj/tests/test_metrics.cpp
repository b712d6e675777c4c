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

#include <gtest/gtest.h>

#include <Eigen/LU>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cosg/errors.hpp"
#include "cosg/metrics.hpp"
#include "cosg/random.hpp"
#include "cosg/synthetic.hpp"

namespace cosg {
namespace {

// Positions of J joints over T frames from a per-frame callback.
template <typename F>
Tensor trajectory(std::size_t frames, std::size_t joints, F&& f) {
  Tensor p(frames, 3 * joints);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t j = 0; j < joints; ++j)
      for (std::size_t a = 0; a < 3; ++a) p(t, 3 * j + a) = f(t, j, a);
  return p;
}

Tensor affine(const Tensor& x, const Eigen::MatrixXd& a, const Eigen::RowVectorXd& b) {
  Tensor y(x.rows(), static_cast<std::size_t>(a.cols()));
  for (std::size_t n = 0; n < x.rows(); ++n)
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      double acc = b(k);
      for (std::size_t i = 0; i < x.cols(); ++i) acc += x(n, i) * a(static_cast<Eigen::Index>(i), k);
      y(n, static_cast<std::size_t>(k)) = acc;
    }
  return y;
}

// ---------------------------------------------------------------------------

TEST(Kinematics, ConstantAndPolynomialMotion) {
  const double fps = 30.0;
  const Tensor still = trajectory(20, 3, [](auto, auto j, auto a) { return 1.0 + j + 0.5 * a; });
  const MeanStd j0 = average_jerk(still, fps);
  EXPECT_EQ(j0.mean, 0.0);
  EXPECT_EQ(j0.std, 0.0);
  EXPECT_EQ(average_acceleration(still, fps).mean, 0.0);

  const Tensor linear = trajectory(20, 2, [&](auto t, auto j, auto a) { return (a + 1.0) * t / fps + j; });
  EXPECT_NEAR(average_acceleration(linear, fps).mean, 0.0, 1e-9);

  const Tensor quad = trajectory(20, 2, [&](auto t, auto, auto a) { return a == 1 ? std::pow(t / fps, 2) : 0.0; });
  EXPECT_NEAR(average_jerk(quad, fps).mean, 0.0, 1e-6);
  const MeanStd acc = average_acceleration(quad, fps);
  EXPECT_NEAR(acc.mean, 2.0, 1e-9);
  EXPECT_NEAR(acc.std, 0.0, 1e-9);

  const Tensor cubic = trajectory(60, 1, [&](auto t, auto, auto a) { return a == 0 ? std::pow(t / fps, 3) : 0.0; });
  const MeanStd jerk = average_jerk(cubic, fps);
  EXPECT_NEAR(jerk.mean, 6.0, 1e-6);
  EXPECT_NEAR(jerk.std, 0.0, 1e-6);
}

TEST(Kinematics, FrameCountAndShapeErrors) {
  EXPECT_THROW(average_jerk(Tensor(3, 3), 30.0), DataError);
  EXPECT_NO_THROW(average_jerk(Tensor(4, 3), 30.0));
  EXPECT_THROW(average_acceleration(Tensor(2, 3), 30.0), DataError);
  EXPECT_THROW(average_jerk(Tensor(10, 4), 30.0), DimensionError);
}

TEST(Kinematics, TranslationInvariantScaleEquivariant) {
  Rng rng(1);
  const Tensor p = random_normal({40, 6}, rng);
  Tensor shifted = p, scaled = p;
  for (std::size_t t = 0; t < p.rows(); ++t)
    for (std::size_t k = 0; k < p.cols(); ++k) {
      shifted(t, k) += 10.0 * static_cast<double>(k % 3 + 1);
      scaled(t, k) *= 2.5;
    }
  const MeanStd base = average_jerk(p, 30.0);
  EXPECT_NEAR(average_jerk(shifted, 30.0).mean, base.mean, 1e-6 * base.mean);
  EXPECT_NEAR(average_jerk(scaled, 30.0).mean, 2.5 * base.mean, 1e-9 * base.mean);
  EXPECT_NEAR(average_acceleration(scaled, 30.0).std, 2.5 * average_acceleration(p, 30.0).std, 1e-9 * base.mean);
}

TEST(Kinematics, SequenceOrderDoesNotMatter) {
  Rng rng(2);
  const std::vector<Tensor> seqs = {random_normal({10, 3}, rng), random_normal({17, 3}, rng),
                                    random_normal({8, 3}, rng)};
  const std::vector<Tensor> rev(seqs.rbegin(), seqs.rend());
  const MeanStd a = average_acceleration(seqs, 30.0), b = average_acceleration(rev, 30.0);
  EXPECT_NEAR(a.mean, b.mean, 1e-9 * a.mean);
  EXPECT_NEAR(a.std, b.std, 1e-9 * a.std);
  // Pooling weights frames, not sequences.
  std::vector<double> manual;
  for (const Tensor& s : seqs)
    for (std::size_t t = 0; t + 2 < s.rows(); ++t) {
      double sq = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        const double d = (s(t + 2, k) - 2.0 * s(t + 1, k) + s(t, k)) * 900.0;
        sq += d * d;
      }
      manual.push_back(std::sqrt(sq));
    }
  EXPECT_NEAR(a.mean, mean_std(manual).mean, 1e-9 * a.mean);
}

// ---------------------------------------------------------------------------

TEST(Cca, IdentityAndAffineInvariance) {
  Rng rng(3);
  Tensor x = random_normal({500, 6}, rng);
  for (std::size_t n = 0; n < x.rows(); ++n) x(n, 5) = 0.3 * x(n, 0) - x(n, 2) + 0.1 * x(n, 5);
  EXPECT_NEAR(global_cca(x, x), 1.0, 1e-6);
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(6, 6) + 3.0 * Eigen::MatrixXd::Identity(6, 6);
  ASSERT_GT(std::abs(a.determinant()), 1e-3);
  const Tensor y = affine(x, a, Eigen::RowVectorXd::Constant(6, 42.0));
  EXPECT_NEAR(global_cca(x, y), 1.0, 1e-6);
  EXPECT_NEAR(global_cca(y, x), 1.0, 1e-6);
}

TEST(Cca, IndependentSignalsAreWeaklyCorrelated) {
  Rng rng(4);
  const Tensor x = random_normal({10000, 8}, rng);
  const Tensor y = random_normal({10000, 8}, rng);
  const double r = global_cca(x, y);
  EXPECT_LT(r, 0.1);
  EXPECT_GE(r, 0.0);
}

TEST(Cca, SingleCorrelatedDirection) {
  // X, Y share one latent coordinate with correlation rho; the oracle is rho.
  Rng rng(5);
  const double rho = 0.6;
  Tensor x = random_normal({40000, 3}, rng);
  Tensor y = random_normal({40000, 3}, rng);
  for (std::size_t n = 0; n < x.rows(); ++n) y(n, 1) = rho * x(n, 0) + std::sqrt(1 - rho * rho) * y(n, 1);
  EXPECT_NEAR(global_cca(x, y), rho, 0.02);
}

TEST(Cca, Preconditions) {
  EXPECT_THROW(global_cca(Tensor(5, 5), Tensor(5, 2)), DataError);
  EXPECT_THROW(global_cca(Tensor(10, 2), Tensor(9, 2)), DimensionError);
  Rng rng(6);
  EXPECT_THROW(global_cca(Tensor(20, 2, 1.0), random_normal({20, 2}, rng)), DataError);
}

TEST(CcaPerSequence, IdenticalPairsGiveOneAndPermutationInvariance) {
  Rng rng(7);
  std::vector<SequencePair> same;
  for (int i = 0; i < 3; ++i) {
    const Tensor x = random_normal({60, 4}, rng);
    same.push_back({"s" + std::to_string(i), x, x});
  }
  const MeanStd ms = cca_per_sequence(same);
  EXPECT_NEAR(ms.mean, 1.0, 1e-6);
  EXPECT_NEAR(ms.std, 0.0, 1e-6);

  std::vector<SequencePair> mixed = {same[0], {"indep", random_normal({3000, 4}, rng), random_normal({3000, 4}, rng)}};
  const double perfect = global_cca(mixed[0].x, mixed[0].y);
  const double indep = global_cca(mixed[1].x, mixed[1].y);
  const MeanStd m = cca_per_sequence(mixed);
  EXPECT_GT(m.mean, indep);
  EXPECT_LT(m.mean, perfect);
  std::reverse(mixed.begin(), mixed.end());
  const MeanStd r = cca_per_sequence(mixed);
  EXPECT_DOUBLE_EQ(r.mean, m.mean);
  EXPECT_DOUBLE_EQ(r.std, m.std);
}

TEST(CcaPerSequence, ErrorsNameTheSequence) {
  std::vector<SequencePair> pairs = {{"clip_07", Tensor(3, 4), Tensor(3, 4)}};
  try {
    cca_per_sequence(pairs);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("clip_07"), std::string::npos);
  }
}

// ---------------------------------------------------------------------------

TEST(Hellinger, HandCase) {
  const double p[] = {1.0, 0.0}, q[] = {0.5, 0.5};
  EXPECT_NEAR(hellinger(p, q), std::sqrt(1.0 - std::sqrt(0.5)), 1e-12);
  EXPECT_NEAR(hellinger(p, q), 0.5412, 1e-4);
  EXPECT_EQ(hellinger(p, p), 0.0);
  const double r[] = {0.0, 1.0};
  EXPECT_EQ(hellinger(p, r), 1.0);
  const double three[] = {0.2, 0.3, 0.5};
  EXPECT_THROW(hellinger(p, three), DimensionError);
}

TEST(Hellinger, SelfComparisonAndDisjointSupport) {
  Rng rng(8);
  const std::vector<Tensor> a = {random_normal({50, 4}, rng), random_normal({30, 4}, rng)};
  EXPECT_NEAR(hellinger_avg(a, a), 0.0, 1e-6);
  // Velocities of B all exceed A's in every dimension.
  std::vector<Tensor> b;
  for (const Tensor& s : a) {
    Tensor ramp = s;
    for (std::size_t t = 0; t < s.rows(); ++t)
      for (std::size_t k = 0; k < s.cols(); ++k) ramp(t, k) = 100.0 * static_cast<double>(t);
    b.push_back(ramp);
  }
  EXPECT_NEAR(hellinger_avg(a, b), 1.0, 1e-12);
}

TEST(Hellinger, BoundedAndMonotoneUnderSeparation) {
  Rng rng(9);
  const std::vector<Tensor> a = {random_normal({400, 2}, rng)};
  const Tensor base = random_normal({400, 2}, rng);
  double previous = -1.0;
  for (double drift : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 50.0}) {
    Tensor shifted = base;
    for (std::size_t t = 0; t < shifted.rows(); ++t)
      for (std::size_t k = 0; k < 2; ++k) shifted(t, k) += drift * static_cast<double>(t);
    const std::vector<Tensor> b = {shifted};
    const double h = hellinger_avg(a, b);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, 1.0);
    EXPECT_GE(h, previous - 1e-12) << drift;
    previous = h;
  }
  EXPECT_NEAR(previous, 1.0, 1e-12);
}

TEST(Hellinger, DegenerateDimensionContributesZero) {
  Rng rng(10);
  Tensor x = random_normal({30, 2}, rng);
  Tensor y = random_normal({30, 2}, rng);
  for (std::size_t t = 0; t < 30; ++t) {
    x(t, 1) = 5.0;
    y(t, 1) = -2.0;
  }
  const std::vector<Tensor> a = {x}, b = {y};
  // Column 1 is constant in both sets, so only column 0 can contribute.
  Tensor xa(30, 1), yb(30, 1);
  for (std::size_t t = 0; t < 30; ++t) {
    xa(t, 0) = x(t, 0);
    yb(t, 0) = y(t, 0);
  }
  const std::vector<Tensor> a1 = {xa}, b1 = {yb};
  EXPECT_NEAR(hellinger_avg(a, b), 0.5 * hellinger_avg(a1, b1), 1e-12);
  EXPECT_THROW(hellinger_avg(std::vector<Tensor>{Tensor(1, 2)}, b), DataError);
}

// ---------------------------------------------------------------------------

TEST(Fgd, ExactSummaries) {
  GaussianSummary a{Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3)};
  GaussianSummary b{Eigen::Vector3d(1.0, -2.0, 0.5), Eigen::MatrixXd::Identity(3, 3)};
  EXPECT_NEAR(frechet_distance(a, b), 1.0 + 4.0 + 0.25, 1e-12);
  // Commuting diagonal covariances: sum of (sqrt(a_i) - sqrt(b_i))^2.
  GaussianSummary c{Eigen::VectorXd::Zero(2), Eigen::Vector2d(4.0, 9.0).asDiagonal()};
  GaussianSummary d{Eigen::VectorXd::Zero(2), Eigen::Vector2d(1.0, 16.0).asDiagonal()};
  EXPECT_NEAR(frechet_distance(c, d), 1.0 + 1.0, 1e-12);
}

TEST(Fgd, SampledUnitGaussians) {
  Rng rng(11);
  const Tensor a = random_normal({20000, 4}, rng);
  Tensor b = random_normal({20000, 4}, rng);
  for (std::size_t n = 0; n < b.rows(); ++n) b(n, 0) += 1.0;
  EXPECT_NEAR(fgd(a, b), 1.0, 0.05);
}

TEST(Fgd, SelfSymmetryRotation) {
  Rng rng(12);
  Tensor a = random_normal({300, 5}, rng);
  Tensor b = random_normal({200, 5}, rng);
  for (std::size_t n = 0; n < b.rows(); ++n) {
    b(n, 1) = 2.0 * b(n, 1) + b(n, 0);
    b(n, 3) += 0.7;
  }
  EXPECT_NEAR(fgd(a, a), 0.0, 1e-6);
  EXPECT_NEAR(fgd(a, b), fgd(b, a), 1e-9);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(Eigen::MatrixXd::Random(5, 5)).householderQ();
  const Eigen::RowVectorXd zero = Eigen::RowVectorXd::Zero(5);
  EXPECT_NEAR(fgd(affine(a, q, zero), affine(b, q, zero)), fgd(a, b), 1e-6);
}

TEST(Fgd, RankDeficientSelfComparison) {
  // Fewer samples than dimensions, with large-magnitude collinear columns.
  Rng rng(13);
  const Tensor base = random_normal({40, 3}, rng);
  Tensor a(40, 120);
  for (std::size_t n = 0; n < 40; ++n)
    for (std::size_t k = 0; k < 120; ++k) a(n, k) = 100.0 * base(n, k % 3) * static_cast<double>(k % 7 + 1);
  EXPECT_NEAR(fgd(a, a), 0.0, 1e-6);
}

TEST(Fgd, Errors) {
  Tensor bad(10, 2, 0.0);
  bad(3, 1) = std::nan("");
  EXPECT_THROW(fgd(bad, Tensor(10, 2)), DataError);
  EXPECT_THROW(fgd(Tensor(10, 2), Tensor(10, 3)), DimensionError);
  EXPECT_THROW(fgd(Tensor(1, 2), Tensor(10, 2)), DataError);
}

TEST(Fgd, PsdSqrtClipsNegativeEigenvalues) {
  Eigen::Matrix2d m;
  m << 4.0, 0.0, 0.0, -1e-9;
  const Eigen::MatrixXd r = psd_sqrt(m);
  EXPECT_NEAR(r(0, 0), 2.0, 1e-12);
  EXPECT_EQ(r(1, 1), 0.0);
  Rng rng(14);
  const GaussianSummary g = fit_gaussian(random_normal({50, 4}, rng));
  EXPECT_LT((g.covariance - g.covariance.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  const Eigen::MatrixXd s = psd_sqrt(g.covariance);
  EXPECT_LT((s * s - g.covariance).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Fgd, UnbiasedCovariance) {
  const Tensor x = Tensor::matrix({{1.0}, {2.0}, {3.0}, {6.0}});
  const GaussianSummary g = fit_gaussian(x);
  EXPECT_DOUBLE_EQ(g.mean(0), 3.0);
  // Squared deviations 4 + 1 + 0 + 9 over N - 1 = 3.
  EXPECT_DOUBLE_EQ(g.covariance(0, 0), 14.0 / 3.0);
}

// ---------------------------------------------------------------------------

std::vector<Tensor> smooth_sequences(std::size_t count, std::size_t frames, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Tensor> out;
  for (std::size_t s = 0; s < count; ++s) {
    const Tensor phase = random_uniform({dim}, 0.0, 6.28, rng);
    const Tensor freq = random_uniform({dim}, 0.05, 0.3, rng);
    Tensor x(frames, dim);
    for (std::size_t t = 0; t < frames; ++t)
      for (std::size_t k = 0; k < dim; ++k) x(t, k) = std::sin(freq[k] * static_cast<double>(t) + phase[k]);
    out.push_back(x);
  }
  return out;
}

FgdModelConfig small_fgd() {
  FgdModelConfig c;
  c.window = 10;
  c.stride = 2;
  c.hidden = 24;
  c.code = 64;
  c.epochs = 50;
  return c;
}

TEST(FgdFeatureModel, TrainsAndHasFixedCodeWidth) {
  const auto seqs = smooth_sequences(6, 48, 4, 15);
  FgdFeatureModel model(4, small_fgd());
  const std::vector<double> history = model.fit(seqs);
  ASSERT_EQ(history.size(), 51u);
  const Tensor windows = flatten_windows(seqs, 10, 2);
  ASSERT_GE(windows.rows(), 100u);
  EXPECT_LE(model.reconstruction_mse(windows), 0.5 * history.front());
  EXPECT_EQ(model.encode(seqs).cols(), 64u);
  EXPECT_EQ(model.encode(std::span(seqs).first(1)).cols(), 64u);
  EXPECT_NEAR(fgd(model.encode(seqs), model.encode(seqs)), 0.0, 1e-6);
}

TEST(FgdFeatureModel, InsufficientDataAndRoundTrip) {
  const auto few = smooth_sequences(1, 40, 4, 16);
  FgdFeatureModel model(4, small_fgd());
  EXPECT_THROW(model.fit(few), DataError);

  FgdModelConfig quick = small_fgd();
  quick.epochs = 2;
  const auto seqs = smooth_sequences(6, 48, 4, 17);
  FgdFeatureModel trained(4, quick);
  trained.fit(seqs);
  Checkpoint ck;
  trained.save(ck);
  const FgdFeatureModel back = FgdFeatureModel::load(ck, quick);
  EXPECT_EQ(back.encode(seqs), trained.encode(seqs));
  EXPECT_THROW(trained.encode(smooth_sequences(1, 12, 5, 1)), DimensionError);
}

TEST(FlattenWindows, Layout) {
  const Tensor s = Tensor::matrix({{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}});
  const Tensor w = flatten_windows(std::span(&s, 1), 2, 2);
  EXPECT_EQ(w, Tensor::matrix({{1, 2, 3, 4}, {5, 6, 7, 8}}));
}

// ---------------------------------------------------------------------------

std::vector<MotionSample> synthetic_samples(std::size_t count, std::uint64_t seed) {
  const Skeleton skel = synthetic::skeleton();
  std::vector<MotionSample> out;
  for (std::size_t i = 0; i < count; ++i) {
    synthetic::MotionOptions opts;
    opts.frames = 90;
    opts.seed = seed + i;
    opts.yaw_degrees = 30.0 * static_cast<double>(i);
    out.push_back(motion_sample("clip" + std::to_string(i), synthetic::motion(skel, opts)));
  }
  return out;
}

TEST(Report, SelfComparisonHitsIdealValues) {
  const auto ref = synthetic_samples(3, 20);
  ASSERT_EQ(ref[0].positions.cols(), 54u);
  ASSERT_EQ(ref[0].features.cols(), 216u);
  const MetricsReport r = evaluate_motion("GT", ref, ref, {}, nullptr);
  EXPECT_NEAR(r.global_cca, 1.0, 1e-6);
  EXPECT_NEAR(r.cca_per_seq.mean, 1.0, 1e-6);
  EXPECT_NEAR(r.cca_per_seq.std, 0.0, 1e-6);
  EXPECT_NEAR(r.hellinger_avg, 0.0, 1e-6);
  EXPECT_NEAR(r.fgd_raw, 0.0, 1e-6);
  EXPECT_TRUE(std::isnan(r.fgd_feature));
  std::vector<Tensor> pos;
  for (const auto& s : ref) pos.push_back(s.positions);
  EXPECT_EQ(r.avg_jerk.mean, average_jerk(pos, 30.0).mean);
}

TEST(Report, MisalignedClipsAreNamed) {
  auto ref = synthetic_samples(2, 30);
  auto gen = ref;
  gen[1].positions = gen[1].positions.slice_rows(0, 80);
  gen[1].features = gen[1].features.slice_rows(0, 80);
  try {
    evaluate_motion("x", gen, ref, {}, nullptr);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("clip1"), std::string::npos) << e.what();
  }
}

TEST(Report, OutputFormats) {
  MetricsReport gt{"GT", {18149.74, 2252.61}, {401.24, 67.57}, 1.0, {1.0, 0.0}, 0.0, 0.0, 0.0};
  MetricsReport sys{"no_gan", {9731.54, 3636.06}, {242.15, 81.81}, 0.664, {0.93, 0.03}, 0.342, 2.053, 277.539};
  const MetricsReport rows[] = {gt, sys};
  const auto dir = std::filesystem::temp_directory_path() / "cosg_report_test";
  std::filesystem::create_directories(dir);
  write_report_csv(dir / "r.csv", rows);
  std::ifstream csv(dir / "r.csv");
  std::string header, first, second;
  std::getline(csv, header);
  std::getline(csv, first);
  std::getline(csv, second);
  EXPECT_EQ(header,
            "name,avg_jerk_mean,avg_jerk_std,avg_accel_mean,avg_accel_std,global_cca,cca_per_seq_mean,"
            "cca_per_seq_std,hellinger_avg,fgd_feature,fgd_raw");
  EXPECT_EQ(first.substr(0, 3), "GT,");
  EXPECT_EQ(second.substr(0, 7), "no_gan,");

  const std::string table = format_report_table(rows);
  EXPECT_NE(table.find("18149.74 +/- 2252.61"), std::string::npos);
  EXPECT_LT(table.find("Average jerk"), table.find("FGD on raw data space"));
  std::istringstream lines(table);
  std::string l1, l2, l3;
  std::getline(lines, l1);
  std::getline(lines, l2);
  std::getline(lines, l3);
  EXPECT_EQ(l1.size(), l3.size());

  write_report_svg(dir / "r.svg", rows);
  std::ifstream svg(dir / "r.svg");
  const std::string text((std::istreambuf_iterator<char>(svg)), {});
  EXPECT_EQ(text.rfind("<svg", 0), 0u);
  EXPECT_NE(text.find("FGD on feature space"), std::string::npos);
  EXPECT_NE(text.find("</svg>"), std::string::npos);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace cosg
