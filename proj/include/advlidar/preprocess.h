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

#pragma once

#include <optional>

#include "advlidar/feature_grid.h"
#include "advlidar/point_cloud.h"

namespace advlidar {

struct Rectangle {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
};

/// Geometric stand-in for HD-map ROI filtering.
struct RoiSpec {
  enum class Mode { kAllWithinRange, kRectangle };

  Mode mode = Mode::kAllWithinRange;
  std::optional<Rectangle> rectangle;
  double range = 60.0;

  void Validate() const;
};

/// Keeps points within `range` of the origin (bird's-eye distance) and, in
/// rectangle mode, inside the closed rectangle.
PointCloud RoiFilter(const PointCloud& cloud, const RoiSpec& roi);

/// Per-cell statistics over every point with |w_x|, |w_y| < range. Max
/// intensity is the intensity of the highest point (ties: larger intensity).
/// Means are summed in sorted order so the result does not depend on point
/// order.
FeatureGrid ExtractFeatures(const PointCloud& cloud,
                            const GridGeometry& geometry);

/// Coordinate transformation, ROI filter and feature extraction, in that
/// order.
struct PreprocessConfig {
  Pose sensor_pose = Pose::Translation(0.0, 0.0, 1.8);
  RoiSpec roi;
  GridGeometry geometry;
};

/// The ROI-filtered cloud in the perception frame, plus its grid.
struct PreprocessResult {
  PointCloud cloud;
  FeatureGrid grid;
};

PreprocessResult Preprocess(const PointCloud& cloud,
                            const PreprocessConfig& config);

}  // namespace advlidar
