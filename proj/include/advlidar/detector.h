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

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advlidar/feature_grid.h"
#include "advlidar/transform_params.h"

namespace advlidar {

/// Per-cell model outputs. The class head is collapsed to vehicle vs
/// background.
enum class Attribute : int {
  kCenterOffsetU = 0,
  kCenterOffsetV = 1,
  kObjectness = 2,
  kPositiveness = 3,
  kObjectHeight = 4,
  kClassVehicle = 5,
  kClassBackground = 6,
};

inline constexpr int kAttributeCount = 7;

std::string_view AttributeName(Attribute a);
/// Throws kInvalidArgument for names that are not an attribute.
Attribute ParseAttribute(std::string_view name);

class DetectionGrid {
 public:
  explicit DetectionGrid(GridGeometry geometry = {});

  const GridGeometry& geometry() const { return geometry_; }
  int size() const { return geometry_.size; }

  double at(Attribute a, int u, int v) const {
    return data_[Plane(a) + static_cast<std::size_t>(u) * size() + v];
  }
  double& at(Attribute a, int u, int v) {
    return data_[Plane(a) + static_cast<std::size_t>(u) * size() + v];
  }
  std::span<const double> channel(Attribute a) const {
    return {data_.data() + Plane(a), geometry_.cell_count()};
  }
  std::span<double> channel(Attribute a) {
    return {data_.data() + Plane(a), geometry_.cell_count()};
  }

  friend bool operator==(const DetectionGrid&, const DetectionGrid&) = default;

 private:
  std::size_t Plane(Attribute a) const {
    return static_cast<std::size_t>(a) * geometry_.cell_count();
  }

  GridGeometry geometry_;
  std::vector<double> data_;
};

/// Q: the named per-cell channel, copied out.
std::vector<double> ExtractAttribute(const DetectionGrid& grid, Attribute a);
std::vector<double> ExtractAttribute(const DetectionGrid& grid,
                                     std::string_view name);

/// Half-open block of cells [u0, u1) x [v0, v1).
struct CellWindow {
  int u0 = 0;
  int u1 = 0;
  int v0 = 0;
  int v1 = 0;

  bool empty() const { return u1 <= u0 || v1 <= v0; }
  int rows() const { return empty() ? 0 : u1 - u0; }
  int cols() const { return empty() ? 0 : v1 - v0; }
  std::size_t cells() const {
    return static_cast<std::size_t>(rows()) * static_cast<std::size_t>(cols());
  }
  CellWindow Dilated(int r, int size) const;
  static CellWindow Full(int size) { return {0, size, 0, size}; }
};

/// The model M. Implementations must be pure: same grid, same output.
class Detector {
 public:
  virtual ~Detector() = default;

  virtual DetectionGrid Detect(const FeatureGrid& grid) const = 0;

  /// Outputs of a cell depend only on features within this many cells, or on
  /// the whole grid when negative.
  virtual int ReceptiveRadius() const { return -1; }

  /// Objectness and positiveness for the cells of `window`, row-major. The
  /// default runs the full Detect and crops.
  virtual void ScoreWindow(const FeatureGrid& grid, const CellWindow& window,
                           std::span<double> objectness,
                           std::span<double> positiveness) const;

  virtual std::string Version() const = 0;
};

struct HeadWeights {
  double bias = 0.0;
  double count_weight = 0.0;
  double height_weight = 0.0;
  double intensity_weight = 0.0;
};

/// Reference surrogate for the proprietary CNN: logistic heads over
/// box-smoothed per-cell features
///   occupancy = 1 - exp(-count / occupancy_scale)
///   f_count   = log(1 + count)
///   f_height  = occupancy * clamp(max_height - ground_height, 0, height_cap)
///   f_int     = occupancy * mean_intensity
/// The box mean runs over (2 * smoothing_radius + 1)^2 cells, zero padded.
struct SurrogateParams {
  std::string version = "surrogate-v1";
  int smoothing_radius = 4;
  double ground_height = 0.0;
  double height_cap = 1.5;
  /// Points a cell needs before its height and intensity count fully; sparse
  /// cells contribute little.
  double occupancy_scale = 6.0;
  HeadWeights objectness{-6.0, 0.0, 0.0, 0.0};
  HeadWeights positiveness{-6.0, 0.0, 0.0, 0.0};

  void Validate() const;

  static SurrogateParams Default();
};

SurrogateParams ParseSurrogateParams(std::string_view json_text);
SurrogateParams LoadSurrogateParams(const std::filesystem::path& path);
std::string SurrogateParamsToJson(const SurrogateParams& params);

class SurrogateDetector : public Detector {
 public:
  explicit SurrogateDetector(SurrogateParams params = SurrogateParams::Default());

  DetectionGrid Detect(const FeatureGrid& grid) const override;
  int ReceptiveRadius() const override { return params_.smoothing_radius; }
  void ScoreWindow(const FeatureGrid& grid, const CellWindow& window,
                   std::span<double> objectness,
                   std::span<double> positiveness) const override;
  std::string Version() const override { return params_.version; }

  const SurrogateParams& params() const { return params_; }

 private:
  SurrogateParams params_;
};

struct ParamGradient {
  double theta = 0.0;
  double tau_x = 0.0;
  double s_h = 0.0;

  double Norm() const;
};

/// Central differences of f in each of (theta, tau_x, s_h). Throws kNumerical
/// when any evaluation is non-finite.
ParamGradient CentralDifference(
    const std::function<double(const TransformParams&)>& f,
    const TransformParams& probe, double step = 1e-3);

/// Gradient of loss(Detect(build_input(params))) with respect to the
/// transform parameters at `probe`, by central differences through the full
/// detector.
ParamGradient DetectGradient(
    const Detector& detector,
    const std::function<FeatureGrid(const TransformParams&)>& build_input,
    const std::function<double(const DetectionGrid&)>& loss,
    const TransformParams& probe, double step = 1e-3);

}  // namespace advlidar
