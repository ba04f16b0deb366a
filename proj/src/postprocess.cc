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

#include "advlidar/postprocess.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "advlidar/status.h"
#include "json.hpp"

namespace advlidar {

void PerceptionConfig::Validate() const {
  auto in_unit = [](double t) { return t > 0.0 && t < 1.0; };
  if (!in_unit(objectness_threshold) || !in_unit(positiveness_threshold)) {
    Fail(ErrorCode::kValidation, "perception thresholds must lie in (0, 1)");
  }
  if (connectivity != Connectivity::kFour &&
      connectivity != Connectivity::kEight) {
    Fail(ErrorCode::kValidation, "connectivity must be 4 or 8");
  }
}

std::vector<std::vector<CellIndex>> ConnectedComponents(
    std::span<const std::uint8_t> mask, int rows, int cols,
    Connectivity connectivity) {
  if (rows < 0 || cols < 0 ||
      mask.size() != static_cast<std::size_t>(rows) * cols) {
    Fail(ErrorCode::kInvalidArgument, "mask size does not match its shape");
  }
  const bool eight = connectivity == Connectivity::kEight;
  std::vector<int> label(mask.size(), -1);
  std::vector<std::vector<CellIndex>> components;
  std::vector<CellIndex> stack;

  // Row-major seeding visits components in (min u, min v) order.
  for (int u = 0; u < rows; ++u) {
    for (int v = 0; v < cols; ++v) {
      const std::size_t i = static_cast<std::size_t>(u) * cols + v;
      if (!mask[i] || label[i] >= 0) continue;
      const int id = static_cast<int>(components.size());
      std::vector<CellIndex> cells;
      label[i] = id;
      stack.push_back({u, v});
      while (!stack.empty()) {
        const CellIndex c = stack.back();
        stack.pop_back();
        cells.push_back(c);
        for (int du = -1; du <= 1; ++du) {
          for (int dv = -1; dv <= 1; ++dv) {
            if (du == 0 && dv == 0) continue;
            if (!eight && du != 0 && dv != 0) continue;
            const int nu = c.u + du;
            const int nv = c.v + dv;
            if (nu < 0 || nv < 0 || nu >= rows || nv >= cols) continue;
            const std::size_t j = static_cast<std::size_t>(nu) * cols + nv;
            if (!mask[j] || label[j] >= 0) continue;
            label[j] = id;
            stack.push_back({nu, nv});
          }
        }
      }
      std::sort(cells.begin(), cells.end());
      components.push_back(std::move(cells));
    }
  }
  return components;
}

std::vector<Cluster> ClusterCells(const DetectionGrid& dgrid,
                                  const PerceptionConfig& config) {
  config.Validate();
  const int size = dgrid.size();
  const auto obj = dgrid.channel(Attribute::kObjectness);
  const auto pos = dgrid.channel(Attribute::kPositiveness);
  std::vector<std::uint8_t> mask(obj.size());
  for (std::size_t i = 0; i < obj.size(); ++i) {
    mask[i] = obj[i] > config.objectness_threshold ? 1 : 0;
  }
  std::vector<Cluster> clusters;
  for (auto& cells :
       ConnectedComponents(mask, size, size, config.connectivity)) {
    Cluster c;
    double so = 0.0;
    double sp = 0.0;
    for (const auto& cell : cells) {
      const std::size_t i = static_cast<std::size_t>(cell.u) * size + cell.v;
      so += obj[i];
      sp += pos[i];
    }
    c.avg_objectness = so / static_cast<double>(cells.size());
    c.avg_positiveness = sp / static_cast<double>(cells.size());
    c.cells = std::move(cells);
    clusters.push_back(std::move(c));
  }
  return clusters;
}

std::vector<Cluster> FilterPositiveness(std::vector<Cluster> clusters,
                                        const PerceptionConfig& config) {
  config.Validate();
  std::erase_if(clusters, [&](const Cluster& c) {
    return !(c.avg_positiveness > config.positiveness_threshold);
  });
  return clusters;
}

std::vector<Obstacle> BuildBoxes(const std::vector<Cluster>& clusters,
                                 const DetectionGrid& dgrid,
                                 const PointCloud& cloud,
                                 const GridGeometry& geometry) {
  if (!(dgrid.geometry() == geometry)) {
    Fail(ErrorCode::kInvalidArgument, "detection grid geometry mismatch");
  }
  std::vector<int> owner(geometry.cell_count(), -1);
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    for (const auto& c : clusters[k].cells) {
      owner[static_cast<std::size_t>(c.u) * geometry.size + c.v] =
          static_cast<int>(k);
    }
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  struct Extent {
    double lo[3] = {kInf, kInf, kInf};
    double hi[3] = {-kInf, -kInf, -kInf};
    std::size_t n = 0;
  };
  std::vector<Extent> extents(clusters.size());
  for (const Point& p : cloud) {
    if (!(std::abs(p.x) < geometry.range && std::abs(p.y) < geometry.range)) {
      continue;
    }
    const CellIndex c = WorldToCell(p.x, p.y, geometry);
    const int k = owner[static_cast<std::size_t>(c.u) * geometry.size + c.v];
    if (k < 0) continue;
    Extent& e = extents[k];
    const double xyz[3] = {p.x, p.y, p.z};
    for (int d = 0; d < 3; ++d) {
      e.lo[d] = std::min(e.lo[d], xyz[d]);
      e.hi[d] = std::max(e.hi[d], xyz[d]);
    }
    ++e.n;
  }

  std::vector<Obstacle> out;
  out.reserve(clusters.size());
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    const Cluster& cl = clusters[k];
    const Extent& e = extents[k];
    Obstacle o;
    o.cells = cl.cells;
    o.point_count = e.n;
    o.avg_positiveness = cl.avg_positiveness;
    if (e.n > 0) {
      o.bbox = {(e.lo[0] + e.hi[0]) / 2, (e.lo[1] + e.hi[1]) / 2,
                (e.lo[2] + e.hi[2]) / 2, e.hi[0] - e.lo[0],
                e.hi[1] - e.lo[1],       e.hi[2] - e.lo[2]};
    } else {
      double sx = 0.0;
      double sy = 0.0;
      for (const auto& c : cl.cells) {
        const auto w = CellCenter(c.u, c.v, geometry);
        sx += w[0];
        sy += w[1];
      }
      const double n = static_cast<double>(std::max<std::size_t>(cl.cells.size(), 1));
      o.bbox.center_x = sx / n;
      o.bbox.center_y = sy / n;
    }
    double vehicle = 0.0;
    double background = 0.0;
    for (const auto& c : cl.cells) {
      vehicle += dgrid.at(Attribute::kClassVehicle, c.u, c.v);
      background += dgrid.at(Attribute::kClassBackground, c.u, c.v);
    }
    o.label = vehicle >= background ? ObstacleLabel::kVehicle
                                    : ObstacleLabel::kBackground;
    out.push_back(std::move(o));
  }
  return out;
}

PerceptionOutput Perceive(const PointCloud& cloud,
                          const PreprocessConfig& preprocess,
                          const PerceptionConfig& config,
                          const Detector& detector) {
  PreprocessResult pre = Preprocess(cloud, preprocess);
  const DetectionGrid dgrid = detector.Detect(pre.grid);
  auto clusters = FilterPositiveness(ClusterCells(dgrid, config), config);
  PerceptionOutput out;
  out.obstacles = BuildBoxes(clusters, dgrid, pre.cloud, preprocess.geometry);
  out.cloud = std::move(pre.cloud);
  return out;
}

const char* ObstacleLabelName(ObstacleLabel label) {
  return label == ObstacleLabel::kVehicle ? "vehicle" : "background";
}

std::string ObstaclesToJsonLines(const std::vector<Obstacle>& obstacles) {
  std::string out;
  for (const auto& o : obstacles) {
    const nlohmann::json j = {{"cells", o.cells.size()},
                              {"point_count", o.point_count},
                              {"avg_positiveness", o.avg_positiveness},
                              {"center_x", o.bbox.center_x},
                              {"center_y", o.bbox.center_y},
                              {"center_z", o.bbox.center_z},
                              {"length", o.bbox.length},
                              {"width", o.bbox.width},
                              {"height", o.bbox.height},
                              {"label", ObstacleLabelName(o.label)}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace advlidar
