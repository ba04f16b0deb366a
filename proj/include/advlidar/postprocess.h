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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "advlidar/detector.h"
#include "advlidar/feature_grid.h"
#include "advlidar/point_cloud.h"
#include "advlidar/preprocess.h"

namespace advlidar {

enum class Connectivity { kFour = 4, kEight = 8 };

struct PerceptionConfig {
  double objectness_threshold = 0.5;
  double positiveness_threshold = 0.1;
  Connectivity connectivity = Connectivity::kEight;

  void Validate() const;
};

/// Components of a rows x cols row-major mask (nonzero = set), each with its
/// cells in (u, v) order, the list ordered by (min u, min v).
std::vector<std::vector<CellIndex>> ConnectedComponents(
    std::span<const std::uint8_t> mask, int rows, int cols,
    Connectivity connectivity);

struct Cluster {
  std::vector<CellIndex> cells;
  double avg_objectness = 0.0;
  double avg_positiveness = 0.0;
};

/// Components over cells whose objectness strictly exceeds the threshold.
std::vector<Cluster> ClusterCells(const DetectionGrid& dgrid,
                                  const PerceptionConfig& config);

/// Keeps clusters whose mean positiveness strictly exceeds the threshold.
std::vector<Cluster> FilterPositiveness(std::vector<Cluster> clusters,
                                        const PerceptionConfig& config);

enum class ObstacleLabel { kVehicle, kBackground };

struct BoundingBox {
  double center_x = 0.0;
  double center_y = 0.0;
  double center_z = 0.0;
  double length = 0.0;  // along x
  double width = 0.0;   // along y
  double height = 0.0;  // along z
};

struct Obstacle {
  std::vector<CellIndex> cells;
  std::size_t point_count = 0;
  double avg_positiveness = 0.0;
  BoundingBox bbox;
  ObstacleLabel label = ObstacleLabel::kVehicle;
};

/// Axis-aligned boxes over the points that fall in each cluster's cells. A
/// cluster without points gets a zero-size box at the mean of its cell
/// centers.
std::vector<Obstacle> BuildBoxes(const std::vector<Cluster>& clusters,
                                 const DetectionGrid& dgrid,
                                 const PointCloud& cloud,
                                 const GridGeometry& geometry);

struct PerceptionOutput {
  PointCloud cloud;  // ROI-filtered, perception frame
  std::vector<Obstacle> obstacles;
};

/// Preprocess, detect, cluster, filter and box, in that order.
PerceptionOutput Perceive(const PointCloud& cloud,
                          const PreprocessConfig& preprocess,
                          const PerceptionConfig& config,
                          const Detector& detector);

/// One JSON object per line with keys cells, point_count, avg_positiveness,
/// center_x, center_y, center_z, length, width, height, label.
std::string ObstaclesToJsonLines(const std::vector<Obstacle>& obstacles);

const char* ObstacleLabelName(ObstacleLabel label);

}  // namespace advlidar
