// Copyright 2026 The gs4d Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "gs4d/error.hpp"
#include "gs4d/losses.hpp"
#include "gs4d/ssim.hpp"
#include "oracles.hpp"

namespace gs4d {
namespace {

using testing::random_image;

FeaturePlane random_plane(int rows, int cols, int ch, PlaneAxes axes, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1, 1);
  FeaturePlane p(rows, cols, ch, axes);
  for (double& v : p.values) v = u(gen);
  return p;
}

// Direct transcription of the neighbour-difference sum.
double tv_oracle(const FeaturePlane& p) {
  double s = 0;
  for (int c = 0; c < p.channels; ++c)
    for (int i = 0; i < p.rows; ++i)
      for (int j = 0; j < p.cols; ++j) {
        if (i > 0) s += std::pow(p.at(i, j, c) - p.at(i - 1, j, c), 2);
        if (j > 0) s += std::pow(p.at(i, j, c) - p.at(i, j - 1, c), 2);
      }
  return s / (p.channels * p.rows * p.cols);
}

double smooth_oracle(const FeaturePlane& p) {
  double s = 0;
  for (int c = 0; c < p.channels; ++c)
    for (int i = 0; i < p.rows; ++i)
      for (int t = 1; t + 1 < p.cols; ++t)
        s += std::pow(p.at(i, t - 1, c) - 2 * p.at(i, t, c) + p.at(i, t + 1, c), 2);
  return s / (p.channels * p.rows * p.cols);
}

// Plain 2D-window SSIM, no separable filtering.
double ssim_oracle(const Image& a, const Image& b, const Image* mask = nullptr) {
  double g[11][11], gs = 0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) gs += g[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / 4.5);
  const double c1 = 1e-4, c2 = 9e-4;
  double num = 0, den = 0;
  for (int c = 0; c < a.channels; ++c)
    for (int y = 5; y + 5 < a.height; ++y)
      for (int x = 5; x + 5 < a.width; ++x) {
        double ma = 0, mb = 0, aa = 0, bb = 0, ab = 0;
        for (int i = 0; i < 11; ++i)
          for (int j = 0; j < 11; ++j) {
            const double w = g[i][j] / gs;
            const double va = a.at(x + j - 5, y + i - 5, c), vb = b.at(x + j - 5, y + i - 5, c);
            ma += w * va, mb += w * vb, aa += w * va * va, bb += w * vb * vb, ab += w * va * vb;
          }
        const double va = aa - ma * ma, vb = bb - mb * mb, cov = ab - ma * mb;
        const double s = (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        const double m = mask ? mask->at(x, y, 0) : 1.0;
        num += m * s;
        den += m;
      }
  return num / den;
}

// ---------------------------------------------------------------------------

TEST(TvLoss, Examples) {
  EXPECT_EQ(tv_loss(FeaturePlane(5, 4, 3, PlaneAxes::XY, 1.7)), 0.0);
  FeaturePlane p(2, 2, 1, PlaneAxes::XY);
  p.at(0, 1, 0) = 1;
  p.at(1, 1, 0) = 1;
  EXPECT_NEAR(tv_loss(p), 0.5, 1e-12);
}

TEST(TvLoss, MatchesOracleAndGradient) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 10; ++trial) {
    FeaturePlane p = random_plane(4, 4, 1 + trial % 3, PlaneAxes::XY, gen);
    std::vector<double> g(p.size(), 0.0);
    EXPECT_NEAR(tv_loss(p, g), tv_oracle(p), 1e-12);
    const double h = 1e-6;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double keep = p.values[k];
      p.values[k] = keep + h;
      const double lp = tv_loss(p);
      p.values[k] = keep - h;
      const double lm = tv_loss(p);
      p.values[k] = keep;
      EXPECT_LT(testing::rel_error(g[k], (lp - lm) / (2 * h)), 1e-6);
    }
  }
}

TEST(TvLoss, ShiftInvariantAndNonNegative) {
  std::mt19937_64 gen(2);
  FeaturePlane p = random_plane(6, 5, 2, PlaneAxes::YZ, gen);
  const double base = tv_loss(p);
  EXPECT_GE(base, 0.0);
  for (double& v : p.values) v += 3.25;
  EXPECT_NEAR(tv_loss(p), base, 1e-12);
}

TEST(TvLoss, GradientScaleAccumulates) {
  std::mt19937_64 gen(3);
  const FeaturePlane p = random_plane(3, 4, 2, PlaneAxes::XY, gen);
  std::vector<double> g1(p.size(), 0.0), g2(p.size(), 1.0);
  tv_loss(p, g1);
  tv_loss(p, g2, 0.5);
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(g2[k], 1.0 + 0.5 * g1[k], 1e-15);
}

TEST(SmoothLoss, Examples) {
  EXPECT_EQ(smooth_loss(FeaturePlane(4, 8, 2, PlaneAxes::XT, 1.0)), 0.0);
  FeaturePlane lin(1, 3, 1, PlaneAxes::XT);
  lin.at(0, 0, 0) = 0, lin.at(0, 1, 0) = 1, lin.at(0, 2, 0) = 2;
  EXPECT_EQ(smooth_loss(lin), 0.0);
  FeaturePlane bump(1, 3, 1, PlaneAxes::XT);
  bump.at(0, 1, 0) = 1;
  EXPECT_NEAR(smooth_loss(bump), 4.0 / 3.0, 1e-12);
}

TEST(SmoothLoss, MatchesOracleAndGradient) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 10; ++trial) {
    FeaturePlane p = random_plane(3 + trial % 2, 5, 2, PlaneAxes::YT, gen);
    std::vector<double> g(p.size(), 0.0);
    EXPECT_NEAR(smooth_loss(p, g), smooth_oracle(p), 1e-12);
    const double h = 1e-6;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double keep = p.values[k];
      p.values[k] = keep + h;
      const double lp = smooth_loss(p);
      p.values[k] = keep - h;
      const double lm = smooth_loss(p);
      p.values[k] = keep;
      EXPECT_LT(testing::rel_error(g[k], (lp - lm) / (2 * h)), 1e-6);
    }
  }
}

TEST(SmoothLoss, ShiftInvariantAndShortTimeAxis) {
  std::mt19937_64 gen(5);
  FeaturePlane p = random_plane(4, 6, 2, PlaneAxes::ZT, gen);
  const double base = smooth_loss(p);
  for (double& v : p.values) v -= 0.75;
  EXPECT_NEAR(smooth_loss(p), base, 1e-12);
  EXPECT_EQ(smooth_loss(random_plane(4, 2, 2, PlaneAxes::ZT, gen)), 0.0);
}

TEST(FieldRegularizers, SumOverPlanes) {
  FieldConfig cfg;
  cfg.num_levels = 2;
  cfg.base_resolution = 4;
  cfg.time_resolution = 5;
  cfg.channels = 2;
  cfg.hidden_width = 8;
  HexPlaneField field(cfg);
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& p : field.planes())
    for (double& v : p.values) v = u(gen);
  double tv = 0, sm = 0;
  for (const auto& p : field.planes()) {
    tv += tv_oracle(p);
    if (is_time_plane(p.axes)) sm += smooth_oracle(p);
  }
  FieldGradients g(field);
  EXPECT_NEAR(tv_loss(field, &g), tv, 1e-12);
  EXPECT_NEAR(smooth_loss(field, &g), sm, 1e-12);
}

TEST(FieldRegularizers, FreshFieldTimePlanesAreSmooth) {
  FieldConfig cfg;
  cfg.base_resolution = 8;
  cfg.channels = 4;
  const HexPlaneField field(cfg);
  EXPECT_EQ(smooth_loss(field), 0.0);
}

// ---------------------------------------------------------------------------

TEST(Ssim, IdenticalAndAnticorrelated) {
  std::mt19937_64 gen(7);
  const Image a = random_image(16, 16, 3, gen);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  Image checker(16, 16, 3), inverse(16, 16, 3);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      for (int c = 0; c < 3; ++c) {
        checker.at(x, y, c) = (x + y) % 2;
        inverse.at(x, y, c) = 1 - checker.at(x, y, c);
      }
  EXPECT_LT(ssim(checker, inverse), 0.0);
}

TEST(Ssim, MatchesDirectWindowOracle) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 5; ++trial) {
    const Image a = random_image(13 + trial, 17, 3, gen);
    Image b = a;
    std::normal_distribution<double> n(0, 0.1 * (trial + 1));
    for (double& v : b.data) v = std::clamp(v + n(gen), 0.0, 1.0);
    EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b), 1e-9);
    const Image mask = random_image(a.width, a.height, 1, gen);
    EXPECT_NEAR(ssim_with_grad(a, b, &mask, nullptr), ssim_oracle(a, b, &mask), 1e-9);
  }
}

TEST(Ssim, MatchesRecordedReference) {
  const std::string dir = GS4D_FIXTURE_DIR;
  auto load = [&](const std::string& name) {
    std::ifstream f(dir + "/" + name, std::ios::binary);
    Image img(23, 19, 3);
    f.read(reinterpret_cast<char*>(img.data.data()), img.data.size() * sizeof(double));
    EXPECT_TRUE(f.good()) << name;
    return img;
  };
  const Image a = load("ssim_a.f64"), b = load("ssim_b.f64");
  std::ifstream v(dir + "/ssim_value.txt");
  double expect = 0;
  v >> expect;
  EXPECT_NEAR(ssim(a, b), expect, 1e-6);
}

TEST(Ssim, Errors) {
  EXPECT_THROW(ssim(Image(10, 20, 3), Image(10, 20, 3)), ParameterError);
  EXPECT_THROW(ssim(Image(12, 12, 3), Image(13, 12, 3)), ParameterError);
}

// ---------------------------------------------------------------------------

TEST(ReconLoss, IdenticalIsZero) {
  std::mt19937_64 gen(9);
  const Image a = random_image(16, 14, 3, gen);
  EXPECT_EQ(recon_loss(a, a), 0.0);
  const Image mask = random_image(16, 14, 1, gen);
  EXPECT_EQ(recon_loss(a, a, &mask), 0.0);
}

TEST(ReconLoss, ConstantOffset) {
  std::mt19937_64 gen(10);
  const Image ref = random_image(16, 16, 3, gen, 0, 0.9);
  Image r = ref;
  for (double& v : r.data) v += 0.1;
  const double total = recon_loss(r, ref);
  EXPECT_NEAR(total - 0.2 * (1 - ssim_oracle(r, ref)), 0.08, 1e-12);
  EXPECT_NEAR(recon_loss(r, ref, nullptr, ReconMetric::pure_l1()), 0.1, 1e-12);
}

TEST(ReconLoss, MatchesScalarRecomputation) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 6; ++trial) {
    const Image a = random_image(15, 12, 3, gen), b = random_image(15, 12, 3, gen);
    const Image mask = random_image(15, 12, 1, gen);
    const bool masked = trial % 2;
    double l1 = 0, wsum = 0;
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 15; ++x) {
        const double m = masked ? mask.at(x, y, 0) : 1.0;
        wsum += 3 * m;
        for (int c = 0; c < 3; ++c) l1 += m * std::abs(a.at(x, y, c) - b.at(x, y, c));
      }
    const double want = 0.8 * l1 / wsum + 0.2 * (1 - ssim_oracle(a, b, masked ? &mask : nullptr));
    EXPECT_NEAR(recon_loss(a, b, masked ? &mask : nullptr), want, 1e-9);
  }
}

TEST(ReconLoss, ZeroMaskExcludesPixels) {
  std::mt19937_64 gen(12);
  const Image a = random_image(12, 12, 3, gen);
  Image b = a;
  Image mask(12, 12, 1, 1.0);
  b.at(0, 0, 1) += 0.5;
  mask.at(0, 0, 0) = 0;
  EXPECT_NEAR(recon_loss(b, a, &mask, ReconMetric::pure_l1()), 0.0, 1e-15);
}

TEST(ReconLoss, ShapeMismatch) {
  EXPECT_THROW(recon_loss(Image(12, 12, 3), Image(12, 13, 3)), ParameterError);
  EXPECT_THROW(recon_loss(Image(12, 12, 3), Image(12, 12, 1)), ParameterError);
}

TEST(ReconLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 6; ++trial) {
    Image a = random_image(12, 13, 3, gen), b = random_image(12, 13, 3, gen);
    const Image mask = random_image(12, 13, 1, gen, 0.1, 1);
    const Image* m = trial % 2 ? &mask : nullptr;
    Image g(12, 13, 3);
    recon_loss(a, b, m, {}, &g);
    const double h = 1e-6;
    for (std::size_t k = 0; k < a.data.size(); k += 3) {
      if (std::abs(a.data[k] - b.data[k]) < 1e-4) continue;
      const double keep = a.data[k];
      a.data[k] = keep + h;
      const double lp = recon_loss(a, b, m);
      a.data[k] = keep - h;
      const double lm = recon_loss(a, b, m);
      a.data[k] = keep;
      const double num = (lp - lm) / (2 * h);
      if (std::max(std::abs(num), std::abs(g.data[k])) > 1e-6)
        EXPECT_LT(testing::rel_error(g.data[k], num), 1e-3) << k;
    }
  }
}

// ---------------------------------------------------------------------------

TEST(PseudoLoss, Examples) {
  std::mt19937_64 gen(14);
  std::vector<Image> labels, renders;
  for (int v = 0; v < 4; ++v) labels.push_back(random_image(12, 12, 3, gen, 0, 0.9));
  renders = labels;
  EXPECT_EQ(pseudo_loss(renders, labels), 0.0);
  for (double& x : renders[2].data) x += 0.1;
  EXPECT_NEAR(pseudo_loss(renders, labels, {}, ReconMetric::pure_l1()), 0.025, 1e-12);
}

TEST(PseudoLoss, MeanOfViewsAndGradients) {
  std::mt19937_64 gen(15);
  std::vector<Image> labels, renders;
  for (int v = 0; v < 3; ++v) {
    labels.push_back(random_image(12, 12, 3, gen));
    renders.push_back(random_image(12, 12, 3, gen));
  }
  double mean = 0;
  for (int v = 0; v < 3; ++v) mean += recon_loss(renders[v], labels[v]) / 3;
  std::vector<Image> grads(3, Image(12, 12, 3));
  EXPECT_NEAR(pseudo_loss(renders, labels, {}, {}, grads), mean, 1e-9);
  Image g1(12, 12, 3);
  recon_loss(renders[1], labels[1], nullptr, {}, &g1);
  for (std::size_t k = 0; k < g1.data.size(); ++k) EXPECT_NEAR(grads[1].data[k], g1.data[k] / 3, 1e-15);
}

TEST(PseudoLoss, ViewCountMismatch) {
  std::vector<Image> a(2, Image(12, 12, 3)), b(3, Image(12, 12, 3));
  EXPECT_THROW(pseudo_loss(a, b), ParameterError);
  EXPECT_THROW(pseudo_loss(std::vector<Image>{}, std::vector<Image>{}), ParameterError);
}

// ---------------------------------------------------------------------------

TEST(NoiseSchedule, CosineShape) {
  const NoiseSchedule s;
  auto f = [](double t) { return std::pow(std::cos((t / 1000 + 0.008) / 1.008 * std::numbers::pi / 2), 2); };
  double prev = 1.0 + 1e-12;
  for (int t = 0; t <= 1000; t += 10) {
    const double ab = s.alpha_bar(t);
    EXPECT_LT(ab, prev);
    EXPECT_GE(ab, 0.0);
    if (t < 1000) EXPECT_NEAR(ab, f(t) / f(0), 1e-12);
    prev = ab;
  }
  EXPECT_NEAR(s.alpha_bar(0), 1.0, 1e-12);
  EXPECT_THROW(s.alpha_bar(1001), ParameterError);
}

TEST(Sds, TargetEqualsRenderGivesZero) {
  std::mt19937_64 gen(16);
  const Image r = random_image(8, 6, 3, gen);
  OraclePrior prior(r, 3.0);
  PriorCondition cond;
  cond.reference_image = &r;
  const SdsResult s = sds_inject(prior, r, cond, 500, 42);
  for (double v : s.gradient.data) EXPECT_NEAR(v, 0.0, 1e-9);
  EXPECT_NEAR(s.magnitude, 0.0, 1e-18);
  EXPECT_EQ(s.noise_level, 500);
}

TEST(Sds, PullsTowardTarget) {
  std::mt19937_64 gen(17);
  const Image r = random_image(8, 6, 3, gen);
  const Image delta = random_image(8, 6, 3, gen, -0.2, 0.2);
  Image target = r;
  for (std::size_t i = 0; i < r.data.size(); ++i) target.data[i] -= delta.data[i];
  const double kappa = 2.5;
  OraclePrior prior(target, kappa);
  PriorCondition cond;
  cond.reference_image = &r;
  for (int t : {20, 300, 980}) {
    const SdsResult s = sds_inject(prior, r, cond, t, 7 + t);
    double mag = 0;
    for (std::size_t i = 0; i < r.data.size(); ++i) {
      EXPECT_NEAR(s.gradient.data[i], kappa * delta.data[i], 1e-9);
      mag += s.gradient.data[i] * s.gradient.data[i];
    }
    EXPECT_NEAR(s.magnitude, 0.5 * mag / r.data.size(), 1e-12);
  }
}

TEST(Sds, UniformPullUnitGain) {
  Image r(6, 6, 3, 0.6), target(6, 6, 3, 0.4);
  OraclePrior prior(target, 1.0);
  PriorCondition cond;
  cond.reference_image = &r;
  const SdsResult s = sds_inject(prior, r, cond, 250, 3);
  for (double v : s.gradient.data) EXPECT_NEAR(v, 0.2, 1e-9);
}

TEST(Sds, SeedDeterminesNoise) {
  EXPECT_EQ(sds_noise(9, 7, 3, 11), sds_noise(9, 7, 3, 11));
  EXPECT_NE(sds_noise(9, 7, 3, 11), sds_noise(9, 7, 3, 12));

  // The prior sees x_t = sqrt(ab) x0 + sqrt(1 - ab) eps with the seeded eps.
  struct Recorder final : Prior {
    Image seen;
    Image predict_noise(const Image& x_t, int, const PriorCondition&) override {
      seen = x_t;
      return Image(x_t.width, x_t.height, x_t.channels);
    }
    std::string name() const override { return "recorder"; }
  } rec;
  std::mt19937_64 gen(18);
  const Image r = random_image(9, 7, 3, gen);
  PriorCondition cond;
  cond.reference_image = &r;
  const NoiseSchedule sched;
  const SdsResult s1 = sds_inject(rec, r, cond, 600, 99, sched, 1.0);
  const Image first = rec.seen;
  sds_inject(rec, r, cond, 600, 99, sched, 1.0);
  EXPECT_EQ(first, rec.seen);
  const Image eps = sds_noise(9, 7, 3, 99);
  const double ab = sched.alpha_bar(600);
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    EXPECT_NEAR(first.data[i], std::sqrt(ab) * r.data[i] + std::sqrt(1 - ab) * eps.data[i], 1e-12);
    // A zero prediction makes the gradient -w * eps.
    EXPECT_NEAR(s1.gradient.data[i], -eps.data[i], 1e-15);
  }
}

TEST(Sds, PriorFailurePropagates) {
  struct Failing final : Prior {
    Image predict_noise(const Image&, int, const PriorCondition&) override {
      throw PriorUnavailableError("down");
    }
    std::string name() const override { return "failing"; }
  } prior;
  const Image r(4, 4, 3, 0.5);
  PriorCondition cond;
  cond.reference_image = &r;
  EXPECT_THROW(sds_inject(prior, r, cond, 100, 1), PriorUnavailableError);
}

// ---------------------------------------------------------------------------

TEST(TotalLoss, Examples) {
  EXPECT_EQ(total_loss(LossParts{}, LossWeights{}).total, 0.0);
  LossParts p;
  p.recon = 1, p.pseudo = 1, p.smooth = 1;
  LossWeights w;
  w.pseudo = 1, w.consistency = 1;
  const LossReport r = total_loss(p, w);
  EXPECT_DOUBLE_EQ(r.consistency, 1.0);
  EXPECT_DOUBLE_EQ(r.total, 3.0);
}

TEST(TotalLoss, MatchesWeightedSum) {
  std::mt19937_64 gen(19);
  std::uniform_real_distribution<double> u(0, 2);
  for (int trial = 0; trial < 100; ++trial) {
    const LossParts p{u(gen), u(gen), u(gen), u(gen), u(gen)};
    LossWeights w;
    w.tv = u(gen), w.sds = u(gen), w.pseudo = u(gen), w.consistency = u(gen), w.smooth = u(gen);
    const LossReport r = total_loss(p, w);
    const double cons = w.smooth * p.smooth + w.tv * p.tv + w.sds * p.sds;
    EXPECT_NEAR(r.consistency, cons, 1e-12);
    EXPECT_NEAR(r.total, p.recon + w.pseudo * p.pseudo + w.consistency * cons, 1e-12);
    EXPECT_NEAR(r.total, r.terms.at("recon") + r.terms.at("weighted_pseudo") +
                             r.terms.at("weighted_consistency"), 1e-9);
    const auto j = r.to_json();
    EXPECT_DOUBLE_EQ(j.at("total").get<double>(), r.total);
  }
}

TEST(TotalLoss, DoublingTvWeightDoublesItsEntry) {
  LossParts p{0.3, 0.2, 0.7, 0.1, 0.05};
  LossWeights w;
  const double one = total_loss(p, w).terms.at("weighted_tv");
  w.tv *= 2;
  EXPECT_DOUBLE_EQ(total_loss(p, w).terms.at("weighted_tv"), 2 * one);
}

TEST(TotalLoss, NonFiniteNamesTheTerm) {
  LossParts p;
  p.tv = NAN;
  try {
    total_loss(p, LossWeights{});
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("tv"), std::string::npos) << e.what();
  }
  p.tv = 0;
  p.sds = INFINITY;
  EXPECT_THROW(total_loss(p, LossWeights{}), NumericalError);
}

TEST(LossWeights, Validation) {
  LossWeights w;
  EXPECT_NO_THROW(w.validate());
  w.tv = -1;
  EXPECT_THROW(w.validate(), ParameterError);
  w.tv = NAN;
  EXPECT_THROW(w.validate(), ParameterError);
}

}  // namespace
}  // namespace gs4d
