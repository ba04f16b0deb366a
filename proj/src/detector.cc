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

#include "advlidar/detector.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "advlidar/status.h"
#include "json.hpp"

namespace advlidar {
namespace {

constexpr std::array<std::string_view, kAttributeCount> kAttributeNames = {
    "center_offset_u", "center_offset_v", "objectness",
    "positiveness",    "object_height",   "class_vehicle",
    "class_background"};

double Logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double Linear(const HeadWeights& w, double cnt, double h, double in) {
  return w.bias + w.count_weight * cnt + w.height_weight * h +
         w.intensity_weight * in;
}

// Box-smoothed per-cell features over a window. Sums run in the same order
// for every window, so a cell's output does not depend on the window that
// produced it.
class SmoothedFeatures {
 public:
  SmoothedFeatures(const FeatureGrid& grid, const CellWindow& window,
                   const SurrogateParams& p)
      : window_(window) {
    const int size = grid.size();
    const int r = p.smoothing_radius;
    const CellWindow src = window.Dilated(r, size);
    const int src_rows = src.rows();
    const int src_cols = src.cols();

    std::vector<double> f(kFeatures * src.cells());
    const auto count = grid.channel(FeatureChannel::kCount);
    const auto max_h = grid.channel(FeatureChannel::kMaxHeight);
    const auto mean_int = grid.channel(FeatureChannel::kMeanIntensity);
    for (int u = src.u0; u < src.u1; ++u) {
      for (int v = src.v0; v < src.v1; ++v) {
        const std::size_t g = grid.Offset(u, v);
        const std::size_t l =
            static_cast<std::size_t>(u - src.u0) * src_cols + (v - src.v0);
        const double c = std::max(count[g], 0.0);
        const double occ = 1.0 - std::exp(-c / p.occupancy_scale);
        const double h =
            std::clamp(max_h[g] - p.ground_height, 0.0, p.height_cap);
        f[l * kFeatures + 0] = std::log1p(c);
        f[l * kFeatures + 1] = occ * h;
        f[l * kFeatures + 2] = occ * std::clamp(mean_int[g], 0.0, 1.0);
      }
    }

    // Horizontal pass: rows of src, columns of window.
    const int cols = window.cols();
    std::vector<double> hsum(kFeatures * static_cast<std::size_t>(src_rows) *
                             cols);
    for (int ur = 0; ur < src_rows; ++ur) {
      for (int v = window.v0; v < window.v1; ++v) {
        std::array<double, kFeatures> acc{};
        for (int dv = -r; dv <= r; ++dv) {
          const int vv = v + dv;
          if (vv < 0 || vv >= size) continue;
          const std::size_t l =
              static_cast<std::size_t>(ur) * src_cols + (vv - src.v0);
          for (int k = 0; k < kFeatures; ++k) acc[k] += f[l * kFeatures + k];
        }
        const std::size_t o =
            static_cast<std::size_t>(ur) * cols + (v - window.v0);
        for (int k = 0; k < kFeatures; ++k) hsum[o * kFeatures + k] = acc[k];
      }
    }

    const double norm = 1.0 / ((2.0 * r + 1.0) * (2.0 * r + 1.0));
    values_.resize(kFeatures * window.cells());
    for (int u = window.u0; u < window.u1; ++u) {
      for (int v = window.v0; v < window.v1; ++v) {
        std::array<double, kFeatures> acc{};
        for (int du = -r; du <= r; ++du) {
          const int uu = u + du;
          if (uu < 0 || uu >= size) continue;
          const std::size_t l =
              static_cast<std::size_t>(uu - src.u0) * cols + (v - window.v0);
          for (int k = 0; k < kFeatures; ++k) acc[k] += hsum[l * kFeatures + k];
        }
        const std::size_t o = Local(u, v);
        for (int k = 0; k < kFeatures; ++k)
          values_[o * kFeatures + k] = acc[k] * norm;
      }
    }
  }

  std::size_t Local(int u, int v) const {
    return static_cast<std::size_t>(u - window_.u0) * window_.cols() +
           (v - window_.v0);
  }
  double count(std::size_t l) const { return values_[l * kFeatures + 0]; }
  double height(std::size_t l) const { return values_[l * kFeatures + 1]; }
  double intensity(std::size_t l) const { return values_[l * kFeatures + 2]; }

 private:
  static constexpr int kFeatures = 3;
  CellWindow window_;
  std::vector<double> values_;
};

}  // namespace

std::string_view AttributeName(Attribute a) {
  return kAttributeNames[static_cast<int>(a)];
}

Attribute ParseAttribute(std::string_view name) {
  for (int i = 0; i < kAttributeCount; ++i) {
    if (kAttributeNames[i] == name) return static_cast<Attribute>(i);
  }
  Fail(ErrorCode::kInvalidArgument,
       "unknown attribute '" + std::string(name) + "'");
}

DetectionGrid::DetectionGrid(GridGeometry geometry)
    : geometry_(geometry), data_(kAttributeCount * geometry.cell_count(), 0.0) {}

std::vector<double> ExtractAttribute(const DetectionGrid& grid, Attribute a) {
  const auto c = grid.channel(a);
  return {c.begin(), c.end()};
}

std::vector<double> ExtractAttribute(const DetectionGrid& grid,
                                     std::string_view name) {
  return ExtractAttribute(grid, ParseAttribute(name));
}

CellWindow CellWindow::Dilated(int r, int size) const {
  if (empty()) return {};
  return {std::max(0, u0 - r), std::min(size, u1 + r), std::max(0, v0 - r),
          std::min(size, v1 + r)};
}

void Detector::ScoreWindow(const FeatureGrid& grid, const CellWindow& window,
                           std::span<double> objectness,
                           std::span<double> positiveness) const {
  const DetectionGrid out = Detect(grid);
  std::size_t i = 0;
  for (int u = window.u0; u < window.u1; ++u) {
    for (int v = window.v0; v < window.v1; ++v, ++i) {
      objectness[i] = out.at(Attribute::kObjectness, u, v);
      positiveness[i] = out.at(Attribute::kPositiveness, u, v);
    }
  }
}

void SurrogateParams::Validate() const {
  if (smoothing_radius < 0) {
    Fail(ErrorCode::kValidation, "smoothing_radius must be >= 0");
  }
  const double values[] = {ground_height,
                           height_cap,
                           occupancy_scale,
                           objectness.bias,
                           objectness.count_weight,
                           objectness.height_weight,
                           objectness.intensity_weight,
                           positiveness.bias,
                           positiveness.count_weight,
                           positiveness.height_weight,
                           positiveness.intensity_weight};
  for (double x : values) {
    if (!std::isfinite(x)) {
      Fail(ErrorCode::kValidation, "surrogate parameters must be finite");
    }
  }
  if (!(height_cap > 0.0)) {
    Fail(ErrorCode::kValidation, "height_cap must be > 0");
  }
  if (!(occupancy_scale > 0.0)) {
    Fail(ErrorCode::kValidation, "occupancy_scale must be > 0");
  }
}

SurrogateParams SurrogateParams::Default() {
  SurrogateParams p;
  p.version = "surrogate-v1";
  p.smoothing_radius = 4;
  p.ground_height = 0.0;
  p.height_cap = 1.5;
  p.occupancy_scale = 6.0;
  p.objectness = {-6.0, 4.0, 40.0, 1.0};
  p.positiveness = {-4.0, 0.0, 30.0, 4.0};
  return p;
}

namespace {

void RejectUnknown(const nlohmann::json& j,
                   std::initializer_list<std::string_view> allowed,
                   const std::string& where) {
  if (!j.is_object()) Fail(ErrorCode::kParse, where + " must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (auto k : allowed) known = known || item.key() == k;
    if (!known) {
      Fail(ErrorCode::kValidation,
           "unknown key '" + item.key() + "' in " + where);
    }
  }
}

HeadWeights HeadFromJson(const nlohmann::json& j, const HeadWeights& fallback,
                         const std::string& where) {
  RejectUnknown(j, {"bias", "count_weight", "height_weight", "intensity_weight"},
                where);
  HeadWeights w = fallback;
  w.bias = j.value("bias", w.bias);
  w.count_weight = j.value("count_weight", w.count_weight);
  w.height_weight = j.value("height_weight", w.height_weight);
  w.intensity_weight = j.value("intensity_weight", w.intensity_weight);
  return w;
}

nlohmann::json HeadToJson(const HeadWeights& w) {
  return {{"bias", w.bias},
          {"count_weight", w.count_weight},
          {"height_weight", w.height_weight},
          {"intensity_weight", w.intensity_weight}};
}

}  // namespace

SurrogateParams ParseSurrogateParams(std::string_view json_text) {
  SurrogateParams p = SurrogateParams::Default();
  try {
    const auto j = nlohmann::json::parse(json_text);
    RejectUnknown(j,
                  {"version", "smoothing_radius", "ground_height",
                   "height_cap", "occupancy_scale", "objectness",
                   "positiveness"},
                  "surrogate config");
    p.version = j.value("version", p.version);
    p.smoothing_radius = j.value("smoothing_radius", p.smoothing_radius);
    p.ground_height = j.value("ground_height", p.ground_height);
    p.height_cap = j.value("height_cap", p.height_cap);
    p.occupancy_scale = j.value("occupancy_scale", p.occupancy_scale);
    if (j.contains("objectness")) {
      p.objectness =
          HeadFromJson(j.at("objectness"), p.objectness, "objectness");
    }
    if (j.contains("positiveness")) {
      p.positiveness =
          HeadFromJson(j.at("positiveness"), p.positiveness, "positiveness");
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("surrogate config: ") + e.what());
  }
  p.Validate();
  return p;
}

SurrogateParams LoadSurrogateParams(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseSurrogateParams(ss.str());
}

std::string SurrogateParamsToJson(const SurrogateParams& params) {
  const nlohmann::json j = {{"version", params.version},
                            {"smoothing_radius", params.smoothing_radius},
                            {"ground_height", params.ground_height},
                            {"height_cap", params.height_cap},
                            {"occupancy_scale", params.occupancy_scale},
                            {"objectness", HeadToJson(params.objectness)},
                            {"positiveness", HeadToJson(params.positiveness)}};
  return j.dump(2) + "\n";
}

SurrogateDetector::SurrogateDetector(SurrogateParams params)
    : params_(std::move(params)) {
  params_.Validate();
}

DetectionGrid SurrogateDetector::Detect(const FeatureGrid& grid) const {
  grid.ValidateFinite();
  const int size = grid.size();
  const CellWindow full = CellWindow::Full(size);
  const SmoothedFeatures s(grid, full, params_);
  DetectionGrid out(grid.geometry());
  const int r = params_.smoothing_radius;

  for (int u = 0; u < size; ++u) {
    for (int v = 0; v < size; ++v) {
      const std::size_t l = s.Local(u, v);
      const double cnt = s.count(l);
      const double h = s.height(l);
      const double in = s.intensity(l);
      const double obj = Logistic(Linear(params_.objectness, cnt, h, in));
      out.at(Attribute::kObjectness, u, v) = obj;
      out.at(Attribute::kPositiveness, u, v) =
          Logistic(Linear(params_.positiveness, cnt, h, in));
      out.at(Attribute::kObjectHeight, u, v) = h;
      out.at(Attribute::kClassVehicle, u, v) = obj;
      out.at(Attribute::kClassBackground, u, v) = 1.0 - obj;

      // Offset toward the strongest smoothed count nearby; the cell itself
      // wins ties.
      int best_u = u;
      int best_v = v;
      double best = cnt;
      for (int uu = std::max(0, u - r); uu <= std::min(size - 1, u + r); ++uu) {
        for (int vv = std::max(0, v - r); vv <= std::min(size - 1, v + r);
             ++vv) {
          const double c = s.count(s.Local(uu, vv));
          if (c > best) {
            best = c;
            best_u = uu;
            best_v = vv;
          }
        }
      }
      out.at(Attribute::kCenterOffsetU, u, v) = best_u - u;
      out.at(Attribute::kCenterOffsetV, u, v) = best_v - v;
    }
  }
  return out;
}

void SurrogateDetector::ScoreWindow(const FeatureGrid& grid,
                                    const CellWindow& window,
                                    std::span<double> objectness,
                                    std::span<double> positiveness) const {
  if (window.empty()) return;
  if (objectness.size() < window.cells() || positiveness.size() < window.cells()) {
    Fail(ErrorCode::kInvalidArgument, "score buffers smaller than window");
  }
  const SmoothedFeatures s(grid, window, params_);
  for (std::size_t l = 0; l < window.cells(); ++l) {
    const double cnt = s.count(l);
    const double h = s.height(l);
    const double in = s.intensity(l);
    objectness[l] = Logistic(Linear(params_.objectness, cnt, h, in));
    positiveness[l] = Logistic(Linear(params_.positiveness, cnt, h, in));
  }
}

double ParamGradient::Norm() const {
  return std::sqrt(theta * theta + tau_x * tau_x + s_h * s_h);
}

ParamGradient CentralDifference(
    const std::function<double(const TransformParams&)>& f,
    const TransformParams& probe, double step) {
  if (!(step > 0.0)) Fail(ErrorCode::kInvalidArgument, "step must be > 0");
  auto eval = [&](const TransformParams& p) {
    const double y = f(p);
    if (!std::isfinite(y)) Fail(ErrorCode::kNumerical, "non-finite loss");
    return y;
  };
  auto diff = [&](double TransformParams::*field) {
    TransformParams hi = probe;
    TransformParams lo = probe;
    hi.*field += step;
    lo.*field -= step;
    return (eval(hi) - eval(lo)) / (2.0 * step);
  };
  ParamGradient g;
  g.theta = diff(&TransformParams::theta);
  g.tau_x = diff(&TransformParams::tau_x);
  g.s_h = diff(&TransformParams::s_h);
  return g;
}

ParamGradient DetectGradient(
    const Detector& detector,
    const std::function<FeatureGrid(const TransformParams&)>& build_input,
    const std::function<double(const DetectionGrid&)>& loss,
    const TransformParams& probe, double step) {
  return CentralDifference(
      [&](const TransformParams& p) {
        return loss(detector.Detect(build_input(p)));
      },
      probe, step);
}

}  // namespace advlidar
