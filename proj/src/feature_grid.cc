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

#include "advlidar/feature_grid.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>

#include "advlidar/status.h"

namespace advlidar {
namespace {

constexpr char kGridMagic[4] = {'A', 'F', 'G', '1'};
constexpr std::size_t kHeaderBytes = 64;

void PutU64(std::vector<unsigned char>* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out->push_back((v >> (8 * i)) & 0xffu);
}

std::uint64_t GetU64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

struct ConstantPlanes {
  std::vector<double> direction;
  std::vector<double> distance;
};

// Direction/distance depend only on geometry, so they are built once per
// geometry and copied into each new grid.
std::shared_ptr<const ConstantPlanes> PlanesFor(const GridGeometry& geometry) {
  static std::mutex mu;
  static std::map<std::pair<int, double>, std::shared_ptr<const ConstantPlanes>>
      cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{geometry.size, geometry.range}];
  if (!slot) {
    auto planes = std::make_shared<ConstantPlanes>();
    planes->direction.resize(geometry.cell_count());
    planes->distance.resize(geometry.cell_count());
    std::size_t i = 0;
    for (int u = 0; u < geometry.size; ++u) {
      for (int v = 0; v < geometry.size; ++v, ++i) {
        const auto [x, y] = CellCenter(u, v, geometry);
        planes->direction[i] = std::atan2(y, x);
        planes->distance[i] = std::hypot(x, y);
      }
    }
    slot = std::move(planes);
  }
  return slot;
}

}  // namespace

CellIndex WorldToCell(double w_x, double w_y, const GridGeometry& geometry) {
  const double range = geometry.range;
  if (!(std::abs(w_x) < range) || !(std::abs(w_y) < range)) {
    Fail(ErrorCode::kRange, "coordinate outside the grid range");
  }
  const double cs = geometry.cell_size();
  int u = static_cast<int>(std::floor((range - w_x) / cs));
  int v = static_cast<int>(std::floor((range - w_y) / cs));
  // (range - w) / cs can round up to size for w just above -range.
  u = std::min(std::max(u, 0), geometry.size - 1);
  v = std::min(std::max(v, 0), geometry.size - 1);
  return {u, v};
}

std::array<double, 2> CellCenter(int u, int v, const GridGeometry& geometry) {
  const double cs = geometry.cell_size();
  return {geometry.range - (u + 0.5) * cs, geometry.range - (v + 0.5) * cs};
}

std::array<double, 2> WorldToGridCoord(double w_x, double w_y,
                                       const GridGeometry& geometry) {
  const double cs = geometry.cell_size();
  return {(geometry.range - w_x) / cs - 0.5, (geometry.range - w_y) / cs - 0.5};
}

std::string_view FeatureChannelName(FeatureChannel c) {
  switch (c) {
    case FeatureChannel::kMaxHeight:
      return "max_height";
    case FeatureChannel::kMaxIntensity:
      return "max_intensity";
    case FeatureChannel::kMeanHeight:
      return "mean_height";
    case FeatureChannel::kMeanIntensity:
      return "mean_intensity";
    case FeatureChannel::kCount:
      return "count";
    case FeatureChannel::kDirection:
      return "direction";
    case FeatureChannel::kDistance:
      return "distance";
    case FeatureChannel::kNonEmpty:
      return "non_empty";
  }
  return "unknown";
}

FeatureGrid::FeatureGrid(GridGeometry geometry)
    : geometry_(geometry),
      data_(static_cast<std::size_t>(kFeatureChannels) *
                geometry.cell_count(),
            0.0) {
  if (geometry.size <= 0 || !(geometry.range > 0.0)) {
    Fail(ErrorCode::kValidation, "grid size and range must be positive");
  }
  const auto planes = PlanesFor(geometry_);
  std::copy(planes->direction.begin(), planes->direction.end(),
            channel(FeatureChannel::kDirection).begin());
  std::copy(planes->distance.begin(), planes->distance.end(),
            channel(FeatureChannel::kDistance).begin());
}

void FeatureGrid::ValidateFinite() const {
  for (double value : data_) {
    if (!std::isfinite(value)) {
      Fail(ErrorCode::kValidation, "feature grid contains non-finite values");
    }
  }
}

void SaveFeatureGrid(const FeatureGrid& grid,
                     const std::filesystem::path& path) {
  std::vector<unsigned char> bytes;
  bytes.reserve(kHeaderBytes + grid.raw().size() * 8);
  for (char c : kGridMagic) bytes.push_back(static_cast<unsigned char>(c));
  for (int i = 0; i < 4; ++i) bytes.push_back(0);
  PutU64(&bytes, static_cast<std::uint64_t>(grid.size()));
  PutU64(&bytes, static_cast<std::uint64_t>(grid.size()));
  PutU64(&bytes, kFeatureChannels);
  PutU64(&bytes, std::bit_cast<std::uint64_t>(grid.range()));
  PutU64(&bytes, std::bit_cast<std::uint64_t>(grid.cell_size()));
  PutU64(&bytes, 0);
  PutU64(&bytes, 0);
  for (double value : grid.raw()) {
    PutU64(&bytes, std::bit_cast<std::uint64_t>(value));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

FeatureGrid LoadFeatureGrid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < kHeaderBytes ||
      std::memcmp(bytes.data(), kGridMagic, 4) != 0) {
    Fail(ErrorCode::kParse, "offset 0: missing AFG1 header");
  }
  const auto width = GetU64(bytes.data() + 8);
  const auto height = GetU64(bytes.data() + 16);
  const auto channels = GetU64(bytes.data() + 24);
  const double range = std::bit_cast<double>(GetU64(bytes.data() + 32));
  if (width != height || channels != kFeatureChannels || width == 0 ||
      width > 1u << 16) {
    Fail(ErrorCode::kParse, "offset 8: unsupported grid shape");
  }
  GridGeometry geometry{static_cast<int>(width), range};
  FeatureGrid grid(geometry);
  const std::size_t values = kFeatureChannels * geometry.cell_count();
  if (bytes.size() != kHeaderBytes + values * 8) {
    Fail(ErrorCode::kParse, "offset 64: payload size does not match header");
  }
  for (int c = 0; c < kFeatureChannels; ++c) {
    auto plane = grid.channel(static_cast<FeatureChannel>(c));
    for (std::size_t i = 0; i < plane.size(); ++i) {
      const std::size_t at = kHeaderBytes + (c * plane.size() + i) * 8;
      plane[i] = std::bit_cast<double>(GetU64(bytes.data() + at));
    }
  }
  return grid;
}

}  // namespace advlidar
