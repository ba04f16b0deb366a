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

#include "advlidar/preprocess.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "advlidar/status.h"
#include "test_util.h"

namespace advlidar {
namespace {

using C = FeatureChannel;

TEST(RoiFilterTest, RangeAndOrigin) {
  RoiSpec roi;
  const PointCloud cloud({{70.0, 0.0, 0.0, 0.1}, {0.0, 0.0, 0.0, 0.1}});
  const PointCloud kept = RoiFilter(cloud, roi);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].x, 0.0);
}

TEST(RoiFilterTest, RectangleMatchesPredicate) {
  RoiSpec roi;
  roi.mode = RoiSpec::Mode::kRectangle;
  roi.rectangle = Rectangle{-5.0, 5.0, -2.0, 2.0};
  std::mt19937_64 rng(21);
  const PointCloud cloud = testing::RandomCloud(rng, 5000, 8.0);
  std::vector<Point> expected;
  for (const Point& p : cloud) {
    if (p.x >= -5.0 && p.x <= 5.0 && p.y >= -2.0 && p.y <= 2.0 &&
        std::hypot(p.x, p.y) <= roi.range) {
      expected.push_back(p);
    }
  }
  EXPECT_EQ(RoiFilter(cloud, roi), PointCloud(expected));
}

TEST(RoiFilterTest, InvalidSpecs) {
  RoiSpec roi;
  roi.range = 0.0;
  EXPECT_THROW(roi.Validate(), Error);
  roi.range = 60.0;
  roi.mode = RoiSpec::Mode::kRectangle;
  EXPECT_THROW(roi.Validate(), Error);
  roi.rectangle = Rectangle{5.0, -5.0, -2.0, 2.0};
  EXPECT_THROW(roi.Validate(), Error);
}

TEST(WorldToCellTest, Mapping) {
  const GridGeometry g;
  EXPECT_EQ(WorldToCell(0.0, 0.0, g), (CellIndex{256, 256}));
  EXPECT_EQ(WorldToCell(g.range - 1e-9, 0.0, g).u, 0);
  EXPECT_EQ(WorldToCell(0.0, -g.range + 1e-9, g).v, g.size - 1);
  EXPECT_THROW(WorldToCell(g.range, 0.0, g), Error);
  EXPECT_THROW(WorldToCell(0.0, -61.0, g), Error);
  try {
    WorldToCell(100.0, 0.0, g);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRange);
  }
}

TEST(WorldToCellTest, CenterRoundTrip) {
  const GridGeometry g;
  for (int u = 0; u < g.size; u += 7) {
    for (int v = 0; v < g.size; v += 5) {
      const auto c = CellCenter(u, v, g);
      EXPECT_EQ(WorldToCell(c[0], c[1], g), (CellIndex{u, v}));
      const auto gc = WorldToGridCoord(c[0], c[1], g);
      EXPECT_NEAR(gc[0], u, 1e-9);
      EXPECT_NEAR(gc[1], v, 1e-9);
    }
  }
}

TEST(WorldToCellTest, BoundaryFollowsFloor) {
  const GridGeometry g;
  // x = range - 3 * cell_size is the edge between rows 2 and 3; floor of
  // (range - x) / cell_size puts it in row 3.
  const double edge = g.range - 3 * g.cell_size();
  EXPECT_EQ(WorldToCell(edge, 0.0, g).u, 3);
  EXPECT_EQ(WorldToCell(0.0, g.range - 7 * g.cell_size(), g).v, 7);
}

TEST(ExtractFeaturesTest, EmptyCloud) {
  const FeatureGrid grid = ExtractFeatures(PointCloud(), GridGeometry{});
  for (C c : {C::kMaxHeight, C::kMaxIntensity, C::kMeanHeight,
              C::kMeanIntensity, C::kCount, C::kNonEmpty}) {
    const auto ch = grid.channel(c);
    EXPECT_TRUE(std::all_of(ch.begin(), ch.end(),
                            [](double x) { return x == 0.0; }));
  }
}

TEST(ExtractFeaturesTest, SinglePoint) {
  const GridGeometry g;
  const FeatureGrid grid = ExtractFeatures(PointCloud({{5.0, 0.0, 1.2, 0.4}}), g);
  const CellIndex c = WorldToCell(5.0, 0.0, g);
  EXPECT_EQ(grid.at(C::kCount, c.u, c.v), 1.0);
  EXPECT_EQ(grid.at(C::kMeanHeight, c.u, c.v), 1.2);
  EXPECT_EQ(grid.at(C::kMaxHeight, c.u, c.v), 1.2);
  EXPECT_EQ(grid.at(C::kMeanIntensity, c.u, c.v), 0.4);
  EXPECT_EQ(grid.at(C::kMaxIntensity, c.u, c.v), 0.4);
  EXPECT_EQ(grid.at(C::kNonEmpty, c.u, c.v), 1.0);
}

TEST(ExtractFeaturesTest, DefaultShape) {
  const FeatureGrid grid;
  EXPECT_EQ(grid.size(), 512);
  EXPECT_EQ(grid.range(), 60.0);
  EXPECT_EQ(grid.raw().size(), 8u * 512u * 512u);
  EXPECT_DOUBLE_EQ(grid.cell_size(), 120.0 / 512.0);
}

TEST(ExtractFeaturesTest, MaxIntensityFollowsHighestPoint) {
  const GridGeometry g;
  const FeatureGrid grid = ExtractFeatures(
      PointCloud({{5.0, 0.0, 0.2, 0.9}, {5.0, 0.0, 1.4, 0.1}}), g);
  const CellIndex c = WorldToCell(5.0, 0.0, g);
  EXPECT_EQ(grid.at(C::kMaxIntensity, c.u, c.v), 0.1);
  EXPECT_DOUBLE_EQ(grid.at(C::kMeanIntensity, c.u, c.v), 0.5);
}

TEST(ExtractFeaturesTest, ConstantChannelsIgnorePoints) {
  const GridGeometry g;
  std::mt19937_64 rng(4);
  const FeatureGrid empty = ExtractFeatures(PointCloud(), g);
  const FeatureGrid full = ExtractFeatures(testing::RandomCloud(rng, 3000, 59.0), g);
  for (C c : {C::kDirection, C::kDistance}) {
    const auto a = empty.channel(c);
    const auto b = full.channel(c);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  }
  const auto w = CellCenter(10, 300, g);
  EXPECT_DOUBLE_EQ(empty.at(C::kDirection, 10, 300), std::atan2(w[1], w[0]));
  EXPECT_DOUBLE_EQ(empty.at(C::kDistance, 10, 300), std::hypot(w[0], w[1]));
}

TEST(ExtractFeaturesTest, MatchesNaiveOracle) {
  const GridGeometry g;
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    // A tight extent piles many points into each cell.
    const double extent = trial % 2 == 0 ? 65.0 : 3.0;
    const PointCloud cloud = testing::RandomCloud(rng, 10000, extent);
    EXPECT_EQ(ExtractFeatures(cloud, g), testing::NaiveFeatures(cloud, g));
  }
}

TEST(ExtractFeaturesTest, Properties) {
  const GridGeometry g;
  std::mt19937_64 rng(7);
  PointCloud cloud = testing::RandomCloud(rng, 8000, 4.0);
  const FeatureGrid grid = ExtractFeatures(cloud, g);

  std::size_t in_range = 0;
  for (const Point& p : cloud) {
    in_range += std::abs(p.x) < g.range && std::abs(p.y) < g.range;
  }
  const auto count = grid.channel(C::kCount);
  EXPECT_EQ(std::accumulate(count.begin(), count.end(), 0.0),
            static_cast<double>(in_range));

  std::map<CellIndex, double> min_h;
  for (const Point& p : cloud) {
    const CellIndex c = WorldToCell(p.x, p.y, g);
    auto [it, fresh] = min_h.emplace(c, p.z);
    if (!fresh) it->second = std::min(it->second, p.z);
  }
  for (int u = 0; u < g.size; ++u) {
    for (int v = 0; v < g.size; ++v) {
      const double n = grid.at(C::kCount, u, v);
      EXPECT_EQ(grid.at(C::kNonEmpty, u, v), n > 0 ? 1.0 : 0.0);
      if (n == 0) continue;
      const double mean = grid.at(C::kMeanHeight, u, v);
      EXPECT_LE(min_h.at({u, v}), mean + 1e-12);
      EXPECT_LE(mean, grid.at(C::kMaxHeight, u, v) + 1e-12);
    }
  }

  std::vector<Point> shuffled(cloud.begin(), cloud.end());
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  EXPECT_EQ(ExtractFeatures(PointCloud(shuffled), g), grid);
}

TEST(PreprocessTest, SensorHeightPutsGroundAtZero) {
  PreprocessConfig config;
  const PreprocessResult r = Preprocess(PointCloud({{5.0, 0.0, -1.8, 0.3}}), config);
  ASSERT_EQ(r.cloud.size(), 1u);
  EXPECT_DOUBLE_EQ(r.cloud[0].z, 0.0);
}

TEST(FeatureGridTest, BinaryRoundTrip) {
  std::mt19937_64 rng(8);
  const FeatureGrid grid =
      ExtractFeatures(testing::RandomCloud(rng, 2000, 30.0), GridGeometry{});
  const auto path = testing::TempPath("grid.afg");
  SaveFeatureGrid(grid, path);
  EXPECT_EQ(LoadFeatureGrid(path), grid);
}

}  // namespace
}  // namespace advlidar
