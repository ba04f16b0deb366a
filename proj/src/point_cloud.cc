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

#include "advlidar/point_cloud.h"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <Eigen/Geometry>

#include "advlidar/status.h"

namespace advlidar {
namespace {

constexpr std::string_view kCsvHeader = "w_x,w_y,w_z,intensity";
constexpr std::array<char, 4> kBinaryMagic = {'A', 'P', 'C', '1'};

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double ParseField(std::string_view field, std::size_t line_no) {
  field = Trim(field);
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) {
    Fail(ErrorCode::kParse, "line " + std::to_string(line_no) +
                                ": cannot parse number '" +
                                std::string(field) + "'");
  }
  return value;
}

Point ParseCsvRow(std::string_view line, std::size_t line_no) {
  std::array<double, 4> values{};
  std::size_t field = 0;
  while (true) {
    const auto comma = line.find(',');
    const auto token = line.substr(0, comma);
    if (field >= values.size()) {
      Fail(ErrorCode::kParse, "line " + std::to_string(line_no) +
                                  ": expected 4 fields, got more");
    }
    values[field++] = ParseField(token, line_no);
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  if (field != values.size()) {
    Fail(ErrorCode::kParse, "line " + std::to_string(line_no) +
                                ": expected 4 fields, got " +
                                std::to_string(field));
  }
  Point p{values[0], values[1], values[2], values[3]};
  try {
    ValidatePoint(p);
  } catch (const Error& e) {
    Fail(ErrorCode::kValidation,
         "line " + std::to_string(line_no) + ": " + e.what());
  }
  return p;
}

void AppendNumber(std::string* out, double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out->append(buf.data(), ptr);
}

void WriteU64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) {
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  }
  os.write(bytes.data(), bytes.size());
}

void WriteF32(std::ostream& os, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  std::array<char, 4> bytes{};
  for (int i = 0; i < 4; ++i) {
    bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  }
  os.write(bytes.data(), bytes.size());
}

std::uint64_t ReadU64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

float ReadF32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return std::bit_cast<float>(v);
}

PointCloud LoadCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<Point> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = Trim(line);
    if (row.empty()) continue;
    if (line_no == 1 && row == kCsvHeader) continue;
    points.push_back(ParseCsvRow(row, line_no));
  }
  return PointCloud(std::move(points));
}

PointCloud LoadBinary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.empty()) return {};
  if (bytes.size() < 12) {
    Fail(ErrorCode::kParse, "offset 0: truncated header");
  }
  for (std::size_t i = 0; i < kBinaryMagic.size(); ++i) {
    if (bytes[i] != static_cast<unsigned char>(kBinaryMagic[i])) {
      Fail(ErrorCode::kParse, "offset 0: bad magic, expected APC1");
    }
  }
  const std::uint64_t count = ReadU64(bytes.data() + 4);
  const std::size_t payload = bytes.size() - 12;
  if (count > payload / 16 || payload != count * 16) {
    Fail(ErrorCode::kParse, "offset 12: header declares " +
                                std::to_string(count) + " points but " +
                                std::to_string(payload) +
                                " payload bytes follow");
  }
  std::vector<Point> points;
  points.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const unsigned char* rec = bytes.data() + 12 + i * 16;
    Point p{ReadF32(rec), ReadF32(rec + 4), ReadF32(rec + 8),
            ReadF32(rec + 12)};
    try {
      ValidatePoint(p);
    } catch (const Error& e) {
      Fail(ErrorCode::kValidation,
           "offset " + std::to_string(12 + i * 16) + ": " + e.what());
    }
    points.push_back(p);
  }
  return PointCloud(std::move(points));
}

}  // namespace

void ValidatePoint(const Point& p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
      !std::isfinite(p.intensity)) {
    Fail(ErrorCode::kValidation, "non-finite point value");
  }
  if (p.intensity < 0.0 || p.intensity > 1.0) {
    Fail(ErrorCode::kValidation, "intensity outside [0, 1]");
  }
}

PointCloud::PointCloud(std::vector<Point> points) : points_(std::move(points)) {
  for (const auto& p : points_) ValidatePoint(p);
}

void PointCloud::Add(const Point& p) {
  ValidatePoint(p);
  points_.push_back(p);
}

Pose Pose::Translation(double x, double y, double z) {
  Pose pose;
  pose.translation = Eigen::Vector3d(x, y, z);
  return pose;
}

Pose Pose::FromYawPitchRoll(double yaw, double pitch, double roll,
                            const Eigen::Vector3d& translation) {
  Pose pose;
  pose.rotation = (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                   Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                   Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
                      .toRotationMatrix();
  pose.translation = translation;
  return pose;
}

Pose Pose::Inverse() const {
  Pose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

void ValidatePose(const Pose& pose) {
  if (!pose.rotation.allFinite() || !pose.translation.allFinite()) {
    Fail(ErrorCode::kValidation, "pose contains non-finite values");
  }
  const Eigen::Matrix3d gram = pose.rotation.transpose() * pose.rotation;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    Fail(ErrorCode::kValidation, "rotation is not orthonormal");
  }
  if (pose.rotation.determinant() < 0.0) {
    Fail(ErrorCode::kValidation, "rotation is a reflection");
  }
}

PointCloud TransformPose(const PointCloud& cloud, const Pose& pose) {
  ValidatePose(pose);
  std::vector<Point> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) {
    const Eigen::Vector3d q =
        pose.rotation * Eigen::Vector3d(p.x, p.y, p.z) + pose.translation;
    out.push_back({q.x(), q.y(), q.z(), p.intensity});
  }
  return PointCloud(std::move(out));
}

PointCloud Append(const PointCloud& cloud, const PointCloud& extra) {
  std::vector<Point> out;
  out.reserve(cloud.size() + extra.size());
  out.insert(out.end(), cloud.begin(), cloud.end());
  out.insert(out.end(), extra.begin(), extra.end());
  return PointCloud(std::move(out));
}

CloudFormat FormatForPath(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? CloudFormat::kCsv
                                    : CloudFormat::kPackedBinary;
}

PointCloud LoadPointCloud(const std::filesystem::path& path,
                          CloudFormat format) {
  return format == CloudFormat::kCsv ? LoadCsv(path) : LoadBinary(path);
}

PointCloud LoadPointCloud(const std::filesystem::path& path) {
  return LoadPointCloud(path, FormatForPath(path));
}

void SavePointCloud(const PointCloud& cloud, const std::filesystem::path& path,
                    CloudFormat format) {
  if (format == CloudFormat::kCsv) {
    std::string text(kCsvHeader);
    text.push_back('\n');
    for (const auto& p : cloud) {
      AppendNumber(&text, p.x);
      text.push_back(',');
      AppendNumber(&text, p.y);
      text.push_back(',');
      AppendNumber(&text, p.z);
      text.push_back(',');
      AppendNumber(&text, p.intensity);
      text.push_back('\n');
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
    out << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(kBinaryMagic.data(), kBinaryMagic.size());
  WriteU64(out, cloud.size());
  for (const auto& p : cloud) {
    WriteF32(out, static_cast<float>(p.x));
    WriteF32(out, static_cast<float>(p.y));
    WriteF32(out, static_cast<float>(p.z));
    WriteF32(out, static_cast<float>(p.intensity));
  }
}

void SavePointCloud(const PointCloud& cloud,
                    const std::filesystem::path& path) {
  SavePointCloud(cloud, path, FormatForPath(path));
}

}  // namespace advlidar
