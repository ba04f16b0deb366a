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
#include <numeric>
#include <vector>

#include "advlidar/status.h"

namespace advlidar {
namespace {

double SortedSum(std::vector<double>* values) {
  std::sort(values->begin(), values->end());
  double sum = 0.0;
  for (double v : *values) sum += v;
  return sum;
}

}  // namespace

void RoiSpec::Validate() const {
  if (!(range > 0.0)) Fail(ErrorCode::kValidation, "ROI range must be > 0");
  if (mode == Mode::kRectangle) {
    if (!rectangle) {
      Fail(ErrorCode::kValidation, "rectangle ROI without a rectangle");
    }
    if (!(rectangle->x_min <= rectangle->x_max) ||
        !(rectangle->y_min <= rectangle->y_max)) {
      Fail(ErrorCode::kValidation, "ROI rectangle is not well ordered");
    }
  }
}

PointCloud RoiFilter(const PointCloud& cloud, const RoiSpec& roi) {
  roi.Validate();
  std::vector<Point> kept;
  kept.reserve(cloud.size());
  for (const auto& p : cloud) {
    if (std::hypot(p.x, p.y) > roi.range) continue;
    if (roi.mode == RoiSpec::Mode::kRectangle) {
      const auto& r = *roi.rectangle;
      if (p.x < r.x_min || p.x > r.x_max || p.y < r.y_min || p.y > r.y_max) {
        continue;
      }
    }
    kept.push_back(p);
  }
  return PointCloud(std::move(kept));
}

FeatureGrid ExtractFeatures(const PointCloud& cloud,
                            const GridGeometry& geometry) {
  FeatureGrid grid(geometry);
  const std::size_t cells = geometry.cell_count();

  // Bucket point indices by cell (counting sort), then reduce each bucket.
  std::vector<std::size_t> cell_of(cloud.size(), cells);
  std::vector<std::size_t> bucket_start(cells + 1, 0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud[i];
    if (!(std::abs(p.x) < geometry.range) || !(std::abs(p.y) < geometry.range)) {
      continue;
    }
    const auto cell = WorldToCell(p.x, p.y, geometry);
    cell_of[i] = grid.Offset(cell.u, cell.v);
    ++bucket_start[cell_of[i] + 1];
  }
  std::partial_sum(bucket_start.begin(), bucket_start.end(),
                   bucket_start.begin());
  std::vector<std::size_t> order(bucket_start.back());
  std::vector<std::size_t> fill(bucket_start.begin(), bucket_start.end() - 1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cell_of[i] < cells) order[fill[cell_of[i]]++] = i;
  }

  auto max_h = grid.channel(FeatureChannel::kMaxHeight);
  auto max_int = grid.channel(FeatureChannel::kMaxIntensity);
  auto mean_h = grid.channel(FeatureChannel::kMeanHeight);
  auto mean_int = grid.channel(FeatureChannel::kMeanIntensity);
  auto count = grid.channel(FeatureChannel::kCount);
  auto non_empty = grid.channel(FeatureChannel::kNonEmpty);

  std::vector<double> heights;
  std::vector<double> intensities;
  for (std::size_t c = 0; c < cells; ++c) {
    const std::size_t begin = bucket_start[c];
    const std::size_t end = bucket_start[c + 1];
    if (begin == end) continue;
    heights.clear();
    intensities.clear();
    const Point* top = nullptr;
    for (std::size_t k = begin; k < end; ++k) {
      const Point& p = cloud[order[k]];
      heights.push_back(p.z);
      intensities.push_back(p.intensity);
      if (top == nullptr || p.z > top->z ||
          (p.z == top->z && p.intensity > top->intensity)) {
        top = &p;
      }
    }
    const double n = static_cast<double>(end - begin);
    count[c] = n;
    non_empty[c] = 1.0;
    max_h[c] = top->z;
    max_int[c] = top->intensity;
    mean_h[c] = SortedSum(&heights) / n;
    mean_int[c] = SortedSum(&intensities) / n;
  }
  return grid;
}

PreprocessResult Preprocess(const PointCloud& cloud,
                            const PreprocessConfig& config) {
  PointCloud filtered =
      RoiFilter(TransformPose(cloud, config.sensor_pose), config.roi);
  FeatureGrid grid = ExtractFeatures(filtered, config.geometry);
  return {std::move(filtered), std::move(grid)};
}

}  // namespace advlidar
