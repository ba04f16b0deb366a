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

#include "advlidar/spoof.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "json.hpp"

#include "advlidar/status.h"
#include "random.h"

namespace advlidar {
namespace {

constexpr double kMinRange = 1.0;
constexpr double kMaxRange = 100.0;
constexpr int kMaxReliableBudget = 60;

struct Spherical {
  double range;
  double azimuth;    // radians
  double elevation;  // radians
};

Spherical ToSpherical(const Point& p) {
  const double rho = std::hypot(p.x, p.y);
  return {std::hypot(rho, p.z), std::atan2(p.y, p.x), std::atan2(p.z, rho)};
}

Point FromSpherical(const Spherical& s, double intensity) {
  const double rho = s.range * std::cos(s.elevation);
  return {rho * std::cos(s.azimuth), rho * std::sin(s.azimuth),
          s.range * std::sin(s.elevation), intensity};
}

int BudgetFor(std::size_t points) {
  for (int b : kBudgets) {
    if (points <= static_cast<std::size_t>(b)) return b;
  }
  Fail(ErrorCode::kCapability,
       "trace has " + std::to_string(points) +
           " points, above the reliable spoofing budget of 60");
}

int CyclesInWindow(const LidarTimingModel& timing, double window_deg) {
  return static_cast<int>(
      std::floor(window_deg / timing.azimuth_resolution_deg + 1e-9));
}

int NearestLine(const LidarTimingModel& timing, double elevation_deg) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(timing.vertical_angles.size()); ++i) {
    if (std::abs(timing.vertical_angles[i] - elevation_deg) <
        std::abs(timing.vertical_angles[best] - elevation_deg)) {
      best = i;
    }
  }
  return best;
}

PointCloud RotateAboutZ(const PointCloud& cloud, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  std::vector<Point> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) {
    out.push_back({c * p.x - s * p.y, s * p.x + c * p.y, p.z, p.intensity});
  }
  return PointCloud(std::move(out));
}

}  // namespace

void TransformParams::Validate() const {
  if (!std::isfinite(theta) || !std::isfinite(tau_x) || !std::isfinite(s_h)) {
    Fail(ErrorCode::kValidation, "transform parameters must be finite");
  }
  if (!(s_h > 0.0)) Fail(ErrorCode::kValidation, "s_h must be > 0");
}

LidarTimingModel LidarTimingModel::Vlp16() {
  LidarTimingModel m;
  for (int i = 0; i < 16; ++i) m.vertical_angles.push_back(-15.0 + 2.0 * i);
  // Interleaved order of the VLP-16 firing sequence: -15, 1, -13, 3, ...
  m.firing_sequence = {0, 8, 1, 9, 2, 10, 3, 11, 4, 12, 5, 13, 6, 14, 7, 15};
  return m;
}

void LidarTimingModel::Validate() const {
  if (vertical_angles.empty()) {
    Fail(ErrorCode::kValidation, "timing model has no vertical angles");
  }
  for (std::size_t i = 0; i < vertical_angles.size(); ++i) {
    if (vertical_angles[i] < -15.0 || vertical_angles[i] > 15.0) {
      Fail(ErrorCode::kValidation, "vertical angle outside [-15, 15]");
    }
    if (i > 0 && !(vertical_angles[i] > vertical_angles[i - 1])) {
      Fail(ErrorCode::kValidation, "vertical angles must ascend");
    }
  }
  for (int line : firing_sequence) {
    if (line < 0 || line >= static_cast<int>(vertical_angles.size())) {
      Fail(ErrorCode::kValidation, "firing sequence references unknown line");
    }
  }
  if (!(slot_period_us > 0.0) || !(cycle_period_us > slot_period_us)) {
    Fail(ErrorCode::kValidation, "need cycle_period > slot_period > 0");
  }
  if (!(azimuth_resolution_deg > 0.0)) {
    Fail(ErrorCode::kValidation, "azimuth resolution must be > 0");
  }
}

int LidarTimingModel::LineForElevation(double elevation_deg,
                                       double tol_deg) const {
  const int line = NearestLine(*this, elevation_deg);
  return std::abs(vertical_angles[line] - elevation_deg) <= tol_deg ? line
                                                                   : -1;
}

bool IsValidBudget(int budget) {
  return std::find(std::begin(kBudgets), std::end(kBudgets), budget) !=
         std::end(kBudgets);
}

double DelayToRange(double delay_ns) {
  return kSpeedOfLight * delay_ns * 1e-9 / 2.0;
}

double RangeToDelay(double range_m) {
  return 2.0 * range_m / kSpeedOfLight * 1e9;
}

SpoofTrace SynthesizeTrace(const LidarTimingModel& timing,
                           std::span<const ScheduledPulse> waveform,
                           double center_azimuth_deg,
                           const SpoofOptions& options) {
  timing.Validate();
  const int spc = timing.slots_per_cycle();
  const int cycles = CyclesInWindow(timing, options.azimuth_window_deg);
  // Slot positions are placed symmetrically about the window center.
  const double intra_max =
      (spc - 1) * timing.slot_period_us / timing.cycle_period_us;
  const double start_deg =
      center_azimuth_deg -
      timing.azimuth_resolution_deg * (cycles - 1 + intra_max) / 2.0;

  SpoofTrace trace;
  trace.azimuth_window_deg = options.azimuth_window_deg;
  trace.budget = BudgetFor(waveform.size());
  std::vector<Point> points;
  points.reserve(waveform.size());
  for (const auto& pulse : waveform) {
    const int cycle = pulse.slot / std::max(spc, 1);
    if (pulse.slot < 0 || cycle >= cycles) {
      Fail(ErrorCode::kCapability,
           "slot " + std::to_string(pulse.slot) +
               " falls outside the azimuth window");
    }
    const double range = DelayToRange(pulse.delay_ns);
    if (!(range >= kMinRange && range <= kMaxRange)) {
      Fail(ErrorCode::kValidation,
           "delay " + std::to_string(pulse.delay_ns) +
               " ns maps outside [1, 100] m");
    }
    const int k = pulse.slot % spc;
    const double elevation =
        DegToRad(timing.vertical_angles[timing.firing_sequence[k]]);
    const double azimuth = DegToRad(
        start_deg +
        timing.azimuth_resolution_deg *
            (cycle + k * timing.slot_period_us / timing.cycle_period_us));
    points.push_back(
        FromSpherical({range, azimuth, elevation}, options.intensity));
  }
  trace.points = PointCloud(std::move(points));
  return trace;
}

SpoofTrace ApplyCapability(const SpoofTrace& trace, const CapabilityDelta& delta,
                           const LidarTimingModel& timing) {
  if (trace.points.empty()) {
    Fail(ErrorCode::kPrecondition, "capability change on an empty trace");
  }
  SpoofTrace out = trace;
  if (delta.delta_r == 0.0 && delta.delta_h == 0 && delta.delta_theta == 0.0) {
    return out;
  }
  std::vector<Point> points;
  points.reserve(trace.points.size());
  for (const auto& p : trace.points) {
    Point q = p;
    const double range = std::hypot(p.x, p.y, p.z);
    if (delta.delta_r != 0.0) {
      const double moved = range + delta.delta_r;
      if (!(moved > 0.0)) {
        Fail(ErrorCode::kCapability, "range change moves a point past the sensor");
      }
      const double k = moved / range;
      q = {p.x * k, p.y * k, p.z * k, p.intensity};
    }
    if (delta.delta_h != 0) {
      Spherical s = ToSpherical(q);
      const int line = timing.LineForElevation(RadToDeg(s.elevation));
      if (line < 0) {
        Fail(ErrorCode::kCapability, "point does not lie on a vertical line");
      }
      const int shifted = line + delta.delta_h;
      if (shifted < 0 ||
          shifted >= static_cast<int>(timing.vertical_angles.size())) {
        Fail(ErrorCode::kCapability,
             "vertical shift leaves the supported angle set");
      }
      s.elevation = DegToRad(timing.vertical_angles[shifted]);
      q = FromSpherical(s, p.intensity);
    }
    points.push_back(q);
  }
  out.points = PointCloud(std::move(points));
  if (delta.delta_theta != 0.0) {
    out.points = RotateAboutZ(out.points, DegToRad(delta.delta_theta));
    out.aligned = false;
  }
  return out;
}

SpoofTrace TransformTrace3d(const SpoofTrace& trace,
                            const TransformParams& params) {
  if (!trace.aligned) {
    Fail(ErrorCode::kPrecondition, "transform requires an aligned trace");
  }
  params.Validate();
  const double c = std::cos(params.theta);
  const double s = std::sin(params.theta);
  std::vector<Point> points;
  points.reserve(trace.points.size());
  for (const auto& p : trace.points) {
    points.push_back({c * p.x - s * p.y + params.tau_x, s * p.x + c * p.y,
                      params.s_h * p.z, p.intensity});
  }
  SpoofTrace out = trace;
  out.points = PointCloud(std::move(points));
  out.aligned = params == TransformParams{};
  return out;
}

double MeanAzimuth(const PointCloud& cloud) {
  double s = 0.0;
  double c = 0.0;
  for (const auto& p : cloud) {
    const double az = std::atan2(p.y, p.x);
    s += std::sin(az);
    c += std::cos(az);
  }
  return std::atan2(s, c);
}

double AzimuthSpanDeg(const PointCloud& cloud) {
  if (cloud.empty()) return 0.0;
  const double mean = MeanAzimuth(cloud);
  double lo = 0.0;
  double hi = 0.0;
  bool first = true;
  for (const auto& p : cloud) {
    const double dev = WrapAngle(std::atan2(p.y, p.x) - mean);
    lo = first ? dev : std::min(lo, dev);
    hi = first ? dev : std::max(hi, dev);
    first = false;
  }
  return RadToDeg(hi - lo);
}

SpoofTrace AlignTrace(const SpoofTrace& trace) {
  if (trace.points.empty()) {
    Fail(ErrorCode::kPrecondition, "cannot align an empty trace");
  }
  SpoofTrace out = trace;
  const double mean = MeanAzimuth(trace.points);
  if (std::abs(mean) > 1e-12) out.points = RotateAboutZ(trace.points, -mean);
  out.aligned = true;
  return out;
}

SpoofTrace SampleTraceLibrary(const LidarTimingModel& timing, int budget,
                              std::uint64_t seed, int variant,
                              const SpoofOptions& options) {
  timing.Validate();
  if (!IsValidBudget(budget)) {
    Fail(ErrorCode::kValidation, "budget must be 20, 40 or 60");
  }
  // Centermost vertical lines x evenly spread azimuth columns.
  int lines = 10;
  int columns = 6;
  if (budget == 40) {
    lines = 8;
    columns = 5;
  } else if (budget == 20) {
    lines = 4;
    columns = 5;
  }
  const int total_lines = static_cast<int>(timing.vertical_angles.size());
  lines = std::min(lines, total_lines);
  columns = budget / lines;
  const int first_line = (total_lines - lines) / 2;
  const int cycles = CyclesInWindow(timing, options.azimuth_window_deg);
  const int spc = timing.slots_per_cycle();

  std::mt19937_64 rng(MixSeed(seed, {static_cast<std::uint64_t>(budget)}));
  std::uniform_real_distribution<double> base_dist(4.5, 5.5);
  std::uniform_real_distribution<double> jitter_dist(-0.15, 0.15);
  std::mt19937_64 device_rng(
      MixSeed(seed, {static_cast<std::uint64_t>(budget), 0x7661726961ULL,
                     static_cast<std::uint64_t>(variant)}));
  std::normal_distribution<double> device_noise(0.0, 0.05);

  const double base = base_dist(rng);
  std::vector<ScheduledPulse> waveform;
  waveform.reserve(budget);
  for (int col = 0; col < columns; ++col) {
    const int cycle =
        columns == 1 ? cycles / 2
                     : static_cast<int>(std::lround(
                           static_cast<double>(col) * (cycles - 1) /
                           (columns - 1)));
    for (int l = first_line; l < first_line + lines; ++l) {
      const auto it = std::find(timing.firing_sequence.begin(),
                                timing.firing_sequence.end(), l);
      const int k = static_cast<int>(it - timing.firing_sequence.begin());
      double range = base + jitter_dist(rng);
      if (variant != 0) {
        range = std::clamp(range + device_noise(device_rng), 4.0, 6.0);
      }
      waveform.push_back({cycle * spc + k, RangeToDelay(range)});
    }
  }
  SpoofTrace trace = SynthesizeTrace(timing, waveform, 0.0, options);
  trace.budget = budget;
  return trace;
}

SpoofTrace RealizeTrace(const SpoofTrace& trace,
                        const LidarTimingModel& timing) {
  timing.Validate();
  SpoofTrace out = trace;
  out.aligned = false;
  if (trace.points.empty()) return out;

  const std::size_t n = trace.points.size();
  std::vector<double> rho(n);
  std::vector<double> azimuth(n);
  std::vector<double> elevation(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = trace.points[i];
    rho[i] = std::hypot(p.x, p.y);
    azimuth[i] = std::atan2(p.y, p.x);
    const int line = NearestLine(timing, RadToDeg(std::atan2(p.z, rho[i])));
    elevation[i] = DegToRad(timing.vertical_angles[line]);
  }

  const double mean = MeanAzimuth(trace.points);
  std::vector<double> dev(n);
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dev[i] = WrapAngle(azimuth[i] - mean);
    lo = i == 0 ? dev[i] : std::min(lo, dev[i]);
    hi = i == 0 ? dev[i] : std::max(hi, dev[i]);
  }
  const double window = DegToRad(trace.azimuth_window_deg) * (1.0 - 1e-9);
  if (hi - lo > window) {
    const double mid = 0.5 * (hi + lo);
    const double scale = window / (hi - lo);
    for (auto& d : dev) d = mid + (d - mid) * scale;
  }

  std::vector<Point> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double range =
        std::clamp(rho[i] / std::cos(elevation[i]), kMinRange, kMaxRange);
    points.push_back(FromSpherical({range, mean + dev[i], elevation[i]},
                                   trace.points[i].intensity));
  }
  out.points = PointCloud(std::move(points));
  return out;
}

CapabilityReport CheckCapability(const SpoofTrace& trace,
                                 const LidarTimingModel& timing) {
  CapabilityReport report;
  if (!IsValidBudget(trace.budget) ||
      trace.points.size() > static_cast<std::size_t>(trace.budget) ||
      trace.budget > kMaxReliableBudget) {
    report.budget_ok = false;
    report.detail += "budget;";
  }
  report.span_deg = AzimuthSpanDeg(trace.points);
  if (report.span_deg > trace.azimuth_window_deg + 1e-9 ||
      trace.azimuth_window_deg > 8.0 + 1e-9) {
    report.span_ok = false;
    report.detail += "azimuth_span;";
  }
  for (const auto& p : trace.points) {
    const Spherical s = ToSpherical(p);
    if (timing.LineForElevation(RadToDeg(s.elevation)) < 0) {
      report.angles_ok = false;
    }
    if (s.range < kMinRange - 1e-9 || s.range > kMaxRange + 1e-9) {
      report.ranges_ok = false;
    }
  }
  if (!report.angles_ok) report.detail += "vertical_angles;";
  if (!report.ranges_ok) report.detail += "ranges;";
  return report;
}

void SaveTrace(const SpoofTrace& trace,
               const std::filesystem::path& cloud_path) {
  SavePointCloud(trace.points, cloud_path);
  nlohmann::json meta = {{"budget", trace.budget},
                         {"azimuth_window_deg", trace.azimuth_window_deg},
                         {"aligned", trace.aligned},
                         {"points", trace.points.size()}};
  std::ofstream out(cloud_path.string() + ".meta.json");
  if (!out) Fail(ErrorCode::kIo, "cannot write trace metadata");
  out << meta.dump(2) << "\n";
}

SpoofTrace LoadTrace(const std::filesystem::path& cloud_path) {
  SpoofTrace trace;
  trace.points = LoadPointCloud(cloud_path);
  std::ifstream in(cloud_path.string() + ".meta.json");
  if (!in) Fail(ErrorCode::kIo, "missing trace metadata for " + cloud_path.string());
  nlohmann::json meta;
  try {
    in >> meta;
    trace.budget = meta.at("budget").get<int>();
    trace.azimuth_window_deg = meta.at("azimuth_window_deg").get<double>();
    trace.aligned = meta.at("aligned").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("trace metadata: ") + e.what());
  }
  return trace;
}

}  // namespace advlidar
