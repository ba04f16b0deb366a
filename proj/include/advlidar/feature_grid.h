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

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace advlidar {

/// Bird's-eye-view cell layout. Row u indexes decreasing w_x, column v
/// decreasing w_y, so the area ahead of the vehicle maps to low u.
struct GridGeometry {
  int size = 512;
  double range = 60.0;

  double cell_size() const { return 2.0 * range / size; }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(size) * static_cast<std::size_t>(size);
  }
  bool Contains(int u, int v) const {
    return u >= 0 && v >= 0 && u < size && v < size;
  }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

struct CellIndex {
  int u = 0;
  int v = 0;

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

/// Throws kRange when |w_x| or |w_y| is not below the grid range. Points on a
/// boundary go to the lower-index cell.
CellIndex WorldToCell(double w_x, double w_y, const GridGeometry& geometry);

/// Cell-center world coordinates.
std::array<double, 2> CellCenter(int u, int v, const GridGeometry& geometry);

/// Continuous grid coordinate whose integer values sit on cell centers; this
/// is the frame bilinear sampling works in.
std::array<double, 2> WorldToGridCoord(double w_x, double w_y,
                                       const GridGeometry& geometry);

enum class FeatureChannel : int {
  kMaxHeight = 0,
  kMaxIntensity = 1,
  kMeanHeight = 2,
  kMeanIntensity = 3,
  kCount = 4,
  kDirection = 5,
  kDistance = 6,
  kNonEmpty = 7,
};

inline constexpr int kFeatureChannels = 8;

std::string_view FeatureChannelName(FeatureChannel c);

/// 8 x size x size per-cell statistics, channel-major. A fresh grid has every
/// point-derived channel at zero and the direction/distance constants filled.
class FeatureGrid {
 public:
  explicit FeatureGrid(GridGeometry geometry = {});

  const GridGeometry& geometry() const { return geometry_; }
  int size() const { return geometry_.size; }
  double range() const { return geometry_.range; }
  double cell_size() const { return geometry_.cell_size(); }

  std::size_t Offset(int u, int v) const {
    return static_cast<std::size_t>(u) * geometry_.size + v;
  }

  double at(FeatureChannel c, int u, int v) const {
    return data_[Plane(c) + Offset(u, v)];
  }
  double& at(FeatureChannel c, int u, int v) {
    return data_[Plane(c) + Offset(u, v)];
  }

  std::span<const double> channel(FeatureChannel c) const {
    return {data_.data() + Plane(c), geometry_.cell_count()};
  }
  std::span<double> channel(FeatureChannel c) {
    return {data_.data() + Plane(c), geometry_.cell_count()};
  }

  std::span<const double> raw() const { return data_; }

  /// Throws kValidation when any value is non-finite.
  void ValidateFinite() const;

  friend bool operator==(const FeatureGrid&, const FeatureGrid&) = default;

 private:
  std::size_t Plane(FeatureChannel c) const {
    return static_cast<std::size_t>(c) * geometry_.cell_count();
  }

  GridGeometry geometry_;
  std::vector<double> data_;
};

// Binary layout: eight little-endian 64-bit header slots (magic "AFG1" padded
// with zeros, width, height, channels, range as f64, cell_size as f64, two
// reserved zeros) followed by channel-major float64 cell values.
void SaveFeatureGrid(const FeatureGrid& grid, const std::filesystem::path& path);
FeatureGrid LoadFeatureGrid(const std::filesystem::path& path);

}  // namespace advlidar
