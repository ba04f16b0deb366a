/******************************************************************************
 * Copyright 2026 The AdvLidar Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *****************************************************************************/

#include "advlidar/advgen.h"

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "advlidar/harness.h"
#include "advlidar/status.h"
#include "test_util.h"

namespace advlidar {
namespace {

using C = FeatureChannel;

void SetCell(FeatureGrid& g, int u, int v, double count, double mean_h,
             double max_h, double mean_int, double max_int) {
  g.at(C::kCount, u, v) = count;
  g.at(C::kMeanHeight, u, v) = mean_h;
  g.at(C::kMaxHeight, u, v) = max_h;
  g.at(C::kMeanIntensity, u, v) = mean_int;
  g.at(C::kMaxIntensity, u, v) = max_int;
  g.at(C::kNonEmpty, u, v) = count > 0 ? 1.0 : 0.0;
}

FeatureGrid TraceGrid(int budget, std::uint64_t seed) {
  const PreprocessConfig pre;
  const SpoofTrace t =
      AlignTrace(SampleTraceLibrary(LidarTimingModel::Vlp16(), budget, seed));
  return Preprocess(t.points, pre).grid;
}

TEST(MergeTest, ZeroIsIdentity) {
  std::mt19937_64 rng(1);
  const FeatureGrid x =
      ExtractFeatures(testing::RandomCloud(rng, 3000, 20.0), GridGeometry{});
  EXPECT_EQ(Merge(x, FeatureGrid()), x);
}

TEST(MergeTest, CountWeightedMeans) {
  FeatureGrid x;
  FeatureGrid t;
  SetCell(x, 5, 5, 2, 1.0, 1.0, 0.2, 0.3);
  SetCell(t, 5, 5, 1, 4.0, 2.0, 0.5, 0.9);
  const FeatureGrid m = Merge(x, t);
  EXPECT_EQ(m.at(C::kCount, 5, 5), 3.0);
  EXPECT_DOUBLE_EQ(m.at(C::kMeanHeight, 5, 5), 2.0);
  EXPECT_DOUBLE_EQ(m.at(C::kMeanIntensity, 5, 5), 0.3);
  EXPECT_EQ(m.at(C::kMaxHeight, 5, 5), 2.0);
  EXPECT_EQ(m.at(C::kMaxIntensity, 5, 5), 0.9);
  EXPECT_EQ(m.at(C::kNonEmpty, 5, 5), 1.0);
}

TEST(MergeTest, TiesKeepSceneIntensity) {
  FeatureGrid x;
  FeatureGrid t;
  SetCell(x, 1, 1, 1, 1.0, 1.0, 0.3, 0.3);
  SetCell(t, 1, 1, 1, 1.0, 1.0, 0.9, 0.9);
  EXPECT_EQ(Merge(x, t).at(C::kMaxIntensity, 1, 1), 0.3);
}

TEST(MergeTest, GeometryMismatch) {
  EXPECT_THROW(Merge(FeatureGrid(), FeatureGrid(GridGeometry{256, 60.0})),
               Error);
}

TEST(MergeTest, MatchesUnionRecomputation) {
  const GridGeometry geo;
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const PointCloud x = testing::RandomCloud(rng, 2000, 8.0);
    const PointCloud t = testing::RandomCloud(rng, 60, 8.0);
    const FeatureGrid merged =
        Merge(ExtractFeatures(x, geo), ExtractFeatures(t, geo));
    const FeatureGrid direct = ExtractFeatures(Append(x, t), geo);
    for (C c : {C::kCount, C::kMeanHeight, C::kMeanIntensity, C::kMaxHeight,
                C::kMaxIntensity, C::kNonEmpty}) {
      const auto a = merged.channel(c);
      const auto b = direct.channel(c);
      for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_NEAR(a[i], b[i], 1e-9) << FeatureChannelName(c);
      }
    }
  }
}

TEST(BilinearTest, Examples) {
  std::vector<double> ch(16, 0.0);
  for (int i = 0; i < 16; ++i) ch[i] = i * 0.5;
  EXPECT_EQ(BilinearSample(ch, 4, 2.0, 1.0), ch[9]);
  std::vector<double> quad = {0, 0, 0, 4};
  EXPECT_DOUBLE_EQ(BilinearSample(quad, 2, 0.5, 0.5), 1.0);
  // u = 1.25, v = 2.5 over rows 1-2, cols 2-3.
  const double expect = ch[6] * 0.75 * 0.5 + ch[7] * 0.75 * 0.5 +
                        ch[10] * 0.25 * 0.5 + ch[11] * 0.25 * 0.5;
  EXPECT_DOUBLE_EQ(BilinearSample(ch, 4, 1.25, 2.5), expect);
  EXPECT_EQ(BilinearSample(ch, 4, -1.0, 0.0), 0.0);
  EXPECT_EQ(BilinearSample(ch, 4, 0.0, 4.0), 0.0);
  // Half a cell outside reads half of the edge value.
  EXPECT_DOUBLE_EQ(BilinearSample(ch, 4, -0.5, 0.0), ch[0] * 0.5);
}

TEST(BilinearTest, LinearInValues) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> val(-2, 2);
  std::uniform_real_distribution<double> pos(-0.5, 7.5);
  std::vector<double> a(64);
  std::vector<double> b(64);
  for (int i = 0; i < 64; ++i) {
    a[i] = val(rng);
    b[i] = val(rng);
  }
  std::vector<double> mix(64);
  for (int i = 0; i < 64; ++i) mix[i] = 2 * a[i] - 3 * b[i];
  for (int k = 0; k < 200; ++k) {
    const double u = pos(rng);
    const double v = pos(rng);
    EXPECT_NEAR(BilinearSample(mix, 8, u, v),
                2 * BilinearSample(a, 8, u, v) - 3 * BilinearSample(b, 8, u, v),
                1e-12);
  }
}

TEST(TransformFeaturesTest, IdentityKeepsGrid) {
  const FeatureGrid t = TraceGrid(60, 4);
  EXPECT_EQ(TransformFeatures(t, {}), t);
}

TEST(TransformFeaturesTest, OneCellShift) {
  const FeatureGrid t = TraceGrid(40, 5);
  const FeatureGrid s = TransformFeatures(t, {0.0, t.cell_size(), 1.0});
  for (C c : {C::kCount, C::kMaxHeight, C::kMeanIntensity}) {
    for (int u = 1; u < t.size(); ++u) {
      for (int v = 0; v < t.size(); ++v) {
        ASSERT_EQ(s.at(c, u - 1, v), t.at(c, u, v));
      }
    }
  }
}

TEST(TransformFeaturesTest, HeightScale) {
  const FeatureGrid t = TraceGrid(60, 6);
  const FeatureGrid s = TransformFeatures(t, {0.0, 0.0, 0.5});
  for (int u = 0; u < t.size(); ++u) {
    for (int v = 0; v < t.size(); ++v) {
      ASSERT_EQ(s.at(C::kMaxHeight, u, v), 0.5 * t.at(C::kMaxHeight, u, v));
      ASSERT_EQ(s.at(C::kMeanHeight, u, v), 0.5 * t.at(C::kMeanHeight, u, v));
      ASSERT_EQ(s.at(C::kCount, u, v), t.at(C::kCount, u, v));
      ASSERT_EQ(s.at(C::kMeanIntensity, u, v), t.at(C::kMeanIntensity, u, v));
    }
  }
  EXPECT_THROW(TransformFeatures(t, {0.0, 0.0, 0.0}), Error);
}

TEST(TransformFeaturesTest, DualOfPointTransform) {
  const PreprocessConfig pre;
  const auto timing = LidarTimingModel::Vlp16();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SpoofTrace t = AlignTrace(SampleTraceLibrary(timing, 60, seed));
    t.points = TransformPose(t.points, pre.sensor_pose);
    const FeatureGrid tg = ExtractFeatures(t.points, pre.geometry);
    const TransformParams p{0.0, static_cast<double>(seed % 5) * tg.cell_size() * 3,
                            1.0};
    const FeatureGrid feature = TransformFeatures(tg, p);
    const FeatureGrid point =
        ExtractFeatures(TransformTrace3d(t, p).points, pre.geometry);
    const auto a = feature.channel(C::kCount);
    const auto b = point.channel(C::kCount);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  }
}

TEST(AdvLossTest, Examples) {
  const AttackTarget target = AttackTarget::Ahead(5.0, GridGeometry{});
  DetectionGrid perfect;
  for (auto& x : perfect.channel(Attribute::kObjectness)) x = 1.0;
  for (auto& x : perfect.channel(Attribute::kPositiveness)) x = 1.0;
  EXPECT_EQ(AdvLoss(perfect, target), 0.0);

  const DetectionGrid null;
  const auto mask = GaussianMask(target, 512);
  EXPECT_DOUBLE_EQ(AdvLoss(null, target),
                   std::accumulate(mask.begin(), mask.end(), 0.0));

  AttackTarget point;
  point.px = 100;
  point.py = 200;
  point.mask_sigma = 0.01;
  DetectionGrid one;
  one.at(Attribute::kObjectness, 100, 200) = 0.8;
  one.at(Attribute::kPositiveness, 100, 200) = 0.8;
  EXPECT_NEAR(AdvLoss(one, point), 0.36, 1e-12);
}

TEST(AdvLossTest, MaskPeaksAtTarget) {
  AttackTarget t;
  t.px = 40;
  t.py = 60;
  const auto mask = GaussianMask(t, 128);
  EXPECT_EQ(mask[40 * 128 + 60], 1.0);
  EXPECT_NEAR(mask[48 * 128 + 60], std::exp(-0.5), 1e-12);
}

TEST(AdvLossTest, MoreScoreLowersLoss) {
  const AttackTarget target = AttackTarget::Ahead(5.0, GridGeometry{});
  DetectionGrid g;
  for (auto& x : g.channel(Attribute::kObjectness)) x = 0.3;
  for (auto& x : g.channel(Attribute::kPositiveness)) x = 0.3;
  double previous = AdvLoss(g, target);
  const int u = static_cast<int>(target.px);
  const int v = static_cast<int>(target.py);
  for (double s : {0.4, 0.6, 0.9}) {
    g.at(Attribute::kObjectness, u + 2, v - 1) = s;
    const double l = AdvLoss(g, target);
    EXPECT_LT(l, previous);
    previous = l;
  }
}

TEST(AttackObjectiveTest, FastPathMatchesNaive) {
  HarnessConfig cfg;
  const SurrogateDetector d(cfg.detector);
  const SceneFrame scene = MakeScene(cfg, 3);
  const SpoofTrace trace = MakeTrace(cfg, 3, 60);
  const FeatureGrid x = Preprocess(scene.cloud, cfg.attack.preprocess).grid;
  const FeatureGrid t = Preprocess(trace.points, cfg.attack.preprocess).grid;
  AttackObjective obj(x, t, d, cfg.attack.target);
  const TransformParams center =
      CenteredStart(trace, cfg.attack.target, cfg.attack.preprocess);
  for (const TransformParams& p :
       {center, TransformParams{center.theta + 0.2, center.tau_x - 1.3, 0.7},
        TransformParams{-0.4, 12.0, 1.3}}) {
    EXPECT_NEAR(obj.Evaluate(p), obj.EvaluateNaive(p),
                1e-9 * std::abs(obj.EvaluateNaive(p)));
  }
}

TEST(AttackObjectiveTest, SymmetricSceneHasFlatThetaGradient) {
  // Mirror every point across the x-axis so both the scene and the trace are
  // symmetric; the target sits on the axis.
  const PreprocessConfig pre;
  std::mt19937_64 rng(8);
  PointCloud half = testing::RandomCloud(rng, 300, 6.0, -1.8, -0.5);
  PointCloud scene;
  for (const Point& p : half) {
    scene.Add(p);
    scene.Add({p.x, -p.y, p.z, p.intensity});
  }
  SpoofTrace trace;
  trace.aligned = true;
  std::uniform_real_distribution<double> y(0.05, 0.4);
  std::uniform_real_distribution<double> x(4.5, 5.5);
  std::uniform_real_distribution<double> z(-1.6, -0.6);
  for (int i = 0; i < 30; ++i) {
    const Point p{x(rng), y(rng), z(rng), 1.0};
    trace.points.Add(p);
    trace.points.Add({p.x, -p.y, p.z, p.intensity});
  }
  const FeatureGrid xg = Preprocess(scene, pre).grid;
  const FeatureGrid tg = Preprocess(trace.points, pre).grid;
  const SurrogateDetector d;
  AttackObjective obj(xg, tg, d, AttackTarget::Ahead(5.0, pre.geometry));
  const ParamGradient g = obj.Gradient({0.0, 0.3, 1.0}, 1e-3);
  EXPECT_LT(std::abs(g.theta), 1e-6 * std::max(1.0, g.Norm()));
  EXPECT_GT(std::abs(g.tau_x) + std::abs(g.s_h), 0.0);
}

TEST(OptimizeAdamTest, ZeroIterations) {
  SamplingSpec spec;
  spec.max_iterations = 0;
  auto loss = [](const TransformParams& p) { return p.tau_x * p.tau_x; };
  auto grad = [](const TransformParams& p) {
    return ParamGradient{0.0, 2 * p.tau_x, 0.0};
  };
  const OptimizeResult r = OptimizeAdam(loss, grad, {0.1, 3.0, 1.0}, spec);
  EXPECT_EQ(r.best_params, (TransformParams{0.1, 3.0, 1.0}));
  EXPECT_EQ(r.best_loss, 9.0);
  EXPECT_EQ(r.trajectory.size(), 1u);
}

TEST(OptimizeAdamTest, ConvergesOnQuadratic) {
  SamplingSpec spec;
  spec.max_iterations = 3000;
  spec.learning_rate = 0.01;
  const TransformParams target{0.3, -2.0, 1.7};
  auto loss = [&](const TransformParams& p) {
    return std::pow(p.theta - target.theta, 2) +
           2 * std::pow(p.tau_x - target.tau_x, 2) +
           0.5 * std::pow(p.s_h - target.s_h, 2);
  };
  auto grad = [&](const TransformParams& p) {
    return ParamGradient{2 * (p.theta - target.theta),
                         4 * (p.tau_x - target.tau_x), p.s_h - target.s_h};
  };
  const OptimizeResult r = OptimizeAdam(loss, grad, {-0.5, 4.0, 1.0}, spec);
  EXPECT_NEAR(r.best_params.theta, target.theta, 1e-2);
  EXPECT_NEAR(r.best_params.tau_x, target.tau_x, 1e-2);
  EXPECT_NEAR(r.best_params.s_h, target.s_h, 1e-2);

  double running = r.trajectory.front().loss;
  for (const auto& row : r.trajectory) {
    running = std::min(running, row.loss);
  }
  EXPECT_EQ(running, r.best_loss);
}

TEST(OptimizeAdamTest, NonFiniteLossAborts) {
  SamplingSpec spec;
  spec.max_iterations = 10;
  spec.learning_rate = 0.5;
  auto loss = [](const TransformParams& p) {
    return p.tau_x < 0.0 ? std::numeric_limits<double>::quiet_NaN()
                         : p.tau_x;
  };
  auto grad = [](const TransformParams&) { return ParamGradient{0, 1, 0}; };
  const OptimizeResult r = OptimizeAdam(loss, grad, {0.0, 1.2, 1.0}, spec);
  EXPECT_TRUE(r.aborted);
  EXPECT_FALSE(r.diagnostic.empty());
  EXPECT_NEAR(r.best_loss, 0.2, 1e-6);
}

TEST(SamplingStartsTest, GridShape) {
  SamplingSpec spec;
  const TransformParams center{0.01, 4.0, 1.0};
  const auto starts = SamplingStarts(center, spec, 5.0);
  ASSERT_EQ(starts.size(), 25u);
  EXPECT_EQ(starts[12], center);
  EXPECT_NEAR(starts[0].tau_x, 4.0 - 12.5, 1e-12);
  EXPECT_NEAR(starts[24].theta, 0.01 + std::atan2(2.0, 5.0), 1e-12);
  spec.n = 1;
  EXPECT_EQ(SamplingStarts(center, spec, 5.0),
            std::vector<TransformParams>{center});
  spec.n = 2;
  const auto even = SamplingStarts(center, spec, 5.0);
  EXPECT_EQ(even.size(), 5u);
  EXPECT_EQ(even.back(), center);
}

class GenerateTest : public ::testing::Test {
 protected:
  void SetUp() override {
    cfg_.attack.sampling.max_iterations = 20;
    scene_ = MakeScene(cfg_, 1);
    trace_ = MakeTrace(cfg_, 1, 60);
  }
  HarnessConfig cfg_;
  SurrogateDetector detector_{SurrogateParams::Default()};
  SceneFrame scene_;
  SpoofTrace trace_;
};

TEST_F(GenerateTest, SingleSampleEqualsVanilla) {
  AttackConfig a = cfg_.attack;
  a.sampling.n = 1;
  a.mode = OptimizerMode::kSampling;
  const AttackResult s = GenerateAdversarial(scene_.cloud, trace_, detector_, a);
  a.mode = OptimizerMode::kVanilla;
  const AttackResult v = GenerateAdversarial(scene_.cloud, trace_, detector_, a);
  EXPECT_EQ(s.best_params, v.best_params);
  EXPECT_EQ(s.best_loss, v.best_loss);
  EXPECT_EQ(s.success, v.success);
  EXPECT_EQ(TrajectoryCsv(s), TrajectoryCsv(v));
}

TEST_F(GenerateTest, SamplingNeverLosesToCenteredStart) {
  AttackConfig a = cfg_.attack;
  a.mode = OptimizerMode::kSampling;
  const AttackResult s = GenerateAdversarial(scene_.cloud, trace_, detector_, a);
  a.mode = OptimizerMode::kVanilla;
  const AttackResult v = GenerateAdversarial(scene_.cloud, trace_, detector_, a);
  EXPECT_LE(s.best_loss, v.best_loss);
  EXPECT_EQ(s.starts[s.center_start].best_loss, v.best_loss);
  for (const auto& start : s.starts) {
    EXPECT_LE(s.best_loss, start.initial_loss);
  }
  const auto report = CheckCapability(s.adversarial_trace, a.timing);
  EXPECT_TRUE(report.ok()) << report.detail;
  EXPECT_EQ(s.adversarial_cloud.size(),
            scene_.cloud.size() + s.adversarial_trace.points.size());
}

TEST_F(GenerateTest, UnalignedTraceIsRejected) {
  SpoofTrace t = trace_;
  t.aligned = false;
  EXPECT_THROW(GenerateAdversarial(scene_.cloud, t, detector_, cfg_.attack),
               Error);
}

TEST(IsSuccessTest, Examples) {
  const HarnessConfig cfg;
  const SurrogateDetector d(cfg.detector);
  SceneOptions road;
  road.background = Background::kEmptyRoad;
  const SceneFrame frame = ScanWorld(GenerateWorld(road, 1), cfg.attack.timing,
                                     cfg.attack.preprocess.sensor_pose, 0.0, 1);
  const auto baseline = Perceive(frame.cloud, cfg.attack.preprocess,
                                 cfg.attack.perception, d)
                            .obstacles;
  EXPECT_FALSE(IsSuccess(frame.cloud, baseline, cfg.attack, d));

  auto blob_at = [](double x0) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PointCloud blob;
    for (int i = 0; i < 400; ++i) {
      blob.Add({x0 - 1 + 2 * u(rng), -0.8 + 1.6 * u(rng),
                -1.8 + 1.5 * u(rng), 0.6});
    }
    return blob;
  };
  EXPECT_TRUE(
      IsSuccess(Append(frame.cloud, blob_at(5.0)), baseline, cfg.attack, d));
  EXPECT_FALSE(
      IsSuccess(Append(frame.cloud, blob_at(12.0)), baseline, cfg.attack, d));
}

}  // namespace
}  // namespace advlidar
