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

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace advlidar {

/// One LiDAR return. Sensor frame: +x forward, +y left, +z up, origin at the
/// LiDAR center.
struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Throws kValidation when a coordinate is non-finite or the intensity leaves
/// [0, 1].
void ValidatePoint(const Point& p);

class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Point> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  const Point& operator[](std::size_t i) const { return points_[i]; }
  std::span<const Point> points() const { return points_; }

  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  void Add(const Point& p);
  void Reserve(std::size_t n) { points_.reserve(n); }

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  std::vector<Point> points_;
};

/// Rigid transform p' = R p + t.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose Identity() { return {}; }
  static Pose Translation(double x, double y, double z);
  static Pose FromYawPitchRoll(double yaw, double pitch, double roll,
                               const Eigen::Vector3d& translation);

  Pose Inverse() const;
};

/// Throws kValidation unless R^T R = I within 1e-9 and det R = +1.
void ValidatePose(const Pose& pose);

PointCloud TransformPose(const PointCloud& cloud, const Pose& pose);

/// X' = X + T'. Order is cloud first, then extra.
PointCloud Append(const PointCloud& cloud, const PointCloud& extra);

enum class CloudFormat { kCsv, kPackedBinary };

/// .csv maps to kCsv, anything else to kPackedBinary.
CloudFormat FormatForPath(const std::filesystem::path& path);

// CSV: header "w_x,w_y,w_z,intensity", one point per line, printed with
// max_digits10 so doubles survive the round trip.
//
// Packed binary: "APC1", little-endian uint64 count, then four float32 per
// point. Values are narrowed to single precision on write.
PointCloud LoadPointCloud(const std::filesystem::path& path, CloudFormat format);
PointCloud LoadPointCloud(const std::filesystem::path& path);
void SavePointCloud(const PointCloud& cloud, const std::filesystem::path& path,
                    CloudFormat format);
void SavePointCloud(const PointCloud& cloud, const std::filesystem::path& path);

}  // namespace advlidar
