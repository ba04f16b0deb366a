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

#include "advlidar/detector.h"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "advlidar/preprocess.h"
#include "advlidar/status.h"
#include "test_util.h"

namespace advlidar {
namespace {

using C = FeatureChannel;

FeatureGrid Block(int u0, int v0, int n, double count, double height) {
  FeatureGrid g;
  for (int u = u0; u < u0 + n; ++u) {
    for (int v = v0; v < v0 + n; ++v) {
      g.at(C::kCount, u, v) = count;
      g.at(C::kMaxHeight, u, v) = height;
      g.at(C::kMeanHeight, u, v) = height / 2;
      g.at(C::kMaxIntensity, u, v) = 0.3;
      g.at(C::kMeanIntensity, u, v) = 0.3;
      g.at(C::kNonEmpty, u, v) = 1.0;
    }
  }
  return g;
}

TEST(SurrogateDetectorTest, EmptyGridGivesLogisticOfBias) {
  const SurrogateDetector d;
  const DetectionGrid out = d.Detect(FeatureGrid());
  const double expected = 1.0 / (1.0 + std::exp(6.0));
  EXPECT_NEAR(expected, 0.0025, 1e-4);
  for (double o : out.channel(Attribute::kObjectness)) {
    ASSERT_DOUBLE_EQ(o, expected);
  }
}

TEST(SurrogateDetectorTest, DenseBlockIsAnObject) {
  const SurrogateDetector d;
  const DetectionGrid out = d.Detect(Block(230, 250, 6, 3.0, 1.5));
  for (int u = 231; u < 235; ++u) {
    for (int v = 251; v < 255; ++v) {
      EXPECT_GT(out.at(Attribute::kObjectness, u, v), 0.5) << u << "," << v;
      EXPECT_GT(out.at(Attribute::kPositiveness, u, v), 0.1);
    }
  }
}

TEST(SurrogateDetectorTest, SparseLowCellsStayBelowThreshold) {
  const SurrogateDetector d;
  const DetectionGrid out = d.Detect(Block(230, 250, 2, 1.0, 0.5));
  for (double o : out.channel(Attribute::kObjectness)) EXPECT_LT(o, 0.5);
}

TEST(SurrogateDetectorTest, DeterministicAndWellFormed) {
  const SurrogateDetector d;
  std::mt19937_64 rng(17);
  FeatureGrid g = ExtractFeatures(testing::RandomCloud(rng, 20000, 20.0, -3, 3),
                                  GridGeometry{});
  const DetectionGrid a = d.Detect(g);
  EXPECT_EQ(a, d.Detect(g));
  for (int u = 0; u < a.size(); ++u) {
    for (int v = 0; v < a.size(); ++v) {
      const double o = a.at(Attribute::kObjectness, u, v);
      const double p = a.at(Attribute::kPositiveness, u, v);
      ASSERT_TRUE(o >= 0.0 && o <= 1.0);
      ASSERT_TRUE(p >= 0.0 && p <= 1.0);
      ASSERT_NEAR(a.at(Attribute::kClassVehicle, u, v) +
                      a.at(Attribute::kClassBackground, u, v),
                  1.0, 1e-6);
      ASSERT_GE(a.at(Attribute::kObjectHeight, u, v), 0.0);
    }
  }
}

TEST(SurrogateDetectorTest, ScoreWindowMatchesDetect) {
  const SurrogateDetector d;
  const FeatureGrid g = Block(100, 300, 5, 4.0, 1.2);
  const DetectionGrid full = d.Detect(g);
  const CellWindow w{90, 115, 290, 320};
  std::vector<double> obj(w.cells());
  std::vector<double> pos(w.cells());
  d.ScoreWindow(g, w, obj, pos);
  std::size_t i = 0;
  for (int u = w.u0; u < w.u1; ++u) {
    for (int v = w.v0; v < w.v1; ++v, ++i) {
      EXPECT_DOUBLE_EQ(obj[i], full.at(Attribute::kObjectness, u, v));
      EXPECT_DOUBLE_EQ(pos[i], full.at(Attribute::kPositiveness, u, v));
    }
  }
}

TEST(SurrogateDetectorTest, MoreCountNeverLowersObjectness) {
  const SurrogateDetector d;
  FeatureGrid g = Block(200, 200, 3, 1.0, 0.8);
  double previous = 0.0;
  for (double count : {1.0, 2.0, 4.0, 8.0, 16.0, 64.0}) {
    g.at(C::kCount, 201, 201) = count;
    const double o = d.Detect(g).at(Attribute::kObjectness, 201, 201);
    EXPECT_GE(o, previous);
    previous = o;
  }
}

TEST(SurrogateDetectorTest, NonFiniteGridIsRejected) {
  const SurrogateDetector d;
  FeatureGrid g;
  g.at(C::kMaxHeight, 3, 3) = NAN;
  try {
    d.Detect(g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
  }
}

TEST(ExtractAttributeTest, Projection) {
  const SurrogateDetector d;
  const DetectionGrid out = d.Detect(Block(50, 60, 4, 5.0, 1.4));
  const DetectionGrid before = out;
  const auto obj = ExtractAttribute(out, "objectness");
  const auto pos = ExtractAttribute(out, Attribute::kPositiveness);
  const auto ch = out.channel(Attribute::kObjectness);
  EXPECT_TRUE(std::equal(obj.begin(), obj.end(), ch.begin()));
  const auto pch = out.channel(Attribute::kPositiveness);
  EXPECT_TRUE(std::equal(pos.begin(), pos.end(), pch.begin()));
  EXPECT_EQ(std::accumulate(obj.begin(), obj.end(), 0.0),
            std::accumulate(ch.begin(), ch.end(), 0.0));
  EXPECT_EQ(out, before);
  EXPECT_THROW(ExtractAttribute(out, "speed"), Error);
}

TEST(SurrogateParamsTest, GoldenDefaults) {
  const SurrogateParams p = SurrogateParams::Default();
  EXPECT_EQ(p.version, "surrogate-v1");
  EXPECT_EQ(p.smoothing_radius, 4);
  EXPECT_EQ(p.ground_height, 0.0);
  EXPECT_EQ(p.height_cap, 1.5);
  EXPECT_EQ(p.occupancy_scale, 6.0);
  EXPECT_EQ(p.objectness.bias, -6.0);
  EXPECT_EQ(p.objectness.count_weight, 4.0);
  EXPECT_EQ(p.objectness.height_weight, 40.0);
  EXPECT_EQ(p.objectness.intensity_weight, 1.0);
  EXPECT_EQ(p.positiveness.bias, -4.0);
  EXPECT_EQ(p.positiveness.count_weight, 0.0);
  EXPECT_EQ(p.positiveness.height_weight, 30.0);
  EXPECT_EQ(p.positiveness.intensity_weight, 4.0);
}

TEST(SurrogateParamsTest, ShippedConfigMatchesDefaults) {
  const SurrogateParams file =
      LoadSurrogateParams(ADVL_SOURCE_DIR "/config/surrogate_v1.json");
  EXPECT_EQ(SurrogateParamsToJson(file),
            SurrogateParamsToJson(SurrogateParams::Default()));
}

TEST(SurrogateParamsTest, JsonRoundTripAndRejections) {
  SurrogateParams p = SurrogateParams::Default();
  p.smoothing_radius = 2;
  p.positiveness.bias = -3.25;
  const SurrogateParams back = ParseSurrogateParams(SurrogateParamsToJson(p));
  EXPECT_EQ(SurrogateParamsToJson(back), SurrogateParamsToJson(p));

  auto code_of = [](const std::string& text) {
    try {
      ParseSurrogateParams(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code_of(R"({"smoothing_radus": 3})"), ErrorCode::kValidation);
  EXPECT_EQ(code_of(R"({"objectness": {"bais": 1}})"), ErrorCode::kValidation);
  EXPECT_EQ(code_of(R"({"smoothing_radius": -1})"), ErrorCode::kValidation);
  EXPECT_EQ(code_of(R"({"occupancy_scale": 0})"), ErrorCode::kValidation);
  EXPECT_EQ(code_of("{not json"), ErrorCode::kParse);
}

TEST(GradientTest, ConstantLossHasZeroGradient) {
  const SurrogateDetector d;
  const FeatureGrid g = Block(10, 10, 3, 2.0, 1.0);
  const ParamGradient grad = DetectGradient(
      d, [&](const TransformParams&) { return g; },
      [](const DetectionGrid&) { return 3.0; }, {0.1, 2.0, 1.0});
  EXPECT_EQ(grad.Norm(), 0.0);
}

TEST(GradientTest, CentralDifferenceOnQuadratic) {
  auto f = [](const TransformParams& p) {
    return 3 * p.theta * p.theta + (p.tau_x - 1) * (p.tau_x - 1) +
           p.s_h * p.theta;
  };
  const ParamGradient g = CentralDifference(f, {0.5, 2.0, 1.5});
  EXPECT_NEAR(g.theta, 6 * 0.5 + 1.5, 1e-9);
  EXPECT_NEAR(g.tau_x, 2.0, 1e-9);
  EXPECT_NEAR(g.s_h, 0.5, 1e-9);
  EXPECT_THROW(
      CentralDifference([](const TransformParams&) { return NAN; }, {}),
      Error);
}

}  // namespace
}  // namespace advlidar
