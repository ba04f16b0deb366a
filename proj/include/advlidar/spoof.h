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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "advlidar/point_cloud.h"
#include "advlidar/transform_params.h"

namespace advlidar {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// Firing-sequence timing of a spinning multi-beam LiDAR. Defaults describe
/// the VLP-16: 16 lasers at 2 degree spacing over [-15, 15], one cycle every
/// 55.296 us with a 2.304 us slot per laser.
struct LidarTimingModel {
  std::vector<double> vertical_angles;  // degrees, ascending
  /// firing_sequence[k] is the vertical_angles index fired in slot k.
  std::vector<int> firing_sequence;
  double cycle_period_us = 55.296;
  double slot_period_us = 2.304;
  double receive_window_ns = 667.0;
  double azimuth_resolution_deg = 0.2;

  static LidarTimingModel Vlp16();

  void Validate() const;
  int slots_per_cycle() const {
    return static_cast<int>(firing_sequence.size());
  }
  /// Index of the vertical angle within tol_deg of elevation_deg, or -1.
  int LineForElevation(double elevation_deg, double tol_deg = 1e-6) const;
};

/// One spoofed pulse: `slot` counts firing slots from the start of the
/// azimuth window (cycle * slots_per_cycle + slot-in-cycle); `delay_ns` is the
/// echo delay the victim measures.
struct ScheduledPulse {
  int slot = 0;
  double delay_ns = 0.0;
};

struct SpoofTrace {
  PointCloud points;
  int budget = 60;
  double azimuth_window_deg = 8.0;
  bool aligned = false;
};

struct SpoofOptions {
  double azimuth_window_deg = 8.0;
  /// Spoofed returns only get described as "high intensity"; configurable.
  double intensity = 1.0;
};

/// Budget levels an attacker can reliably reach.
inline constexpr int kBudgets[] = {20, 40, 60};
bool IsValidBudget(int budget);

double DelayToRange(double delay_ns);
double RangeToDelay(double range_m);

/// Builds the points the victim registers for a crafted pulse waveform whose
/// window is centered at center_azimuth_deg.
SpoofTrace SynthesizeTrace(const LidarTimingModel& timing,
                           std::span<const ScheduledPulse> waveform,
                           double center_azimuth_deg,
                           const SpoofOptions& options = {});

struct CapabilityDelta {
  double delta_r = 0.0;      // meters along each point's ray
  int delta_h = 0;           // vertical-line steps
  double delta_theta = 0.0;  // degrees about the sensor z-axis
};

SpoofTrace ApplyCapability(const SpoofTrace& trace, const CapabilityDelta& delta,
                           const LidarTimingModel& timing);

/// Point-space dual of the feature-space transform: rotate by theta about z,
/// translate by tau_x along x, scale z by s_h. Requires an aligned trace.
SpoofTrace TransformTrace3d(const SpoofTrace& trace,
                            const TransformParams& params);

/// Rotates about z so the circular-mean azimuth becomes 0.
SpoofTrace AlignTrace(const SpoofTrace& trace);

/// Deterministic trace with exactly `budget` points on the central vertical
/// lines, ranges within [4, 6] m, centered at azimuth 0. Variant 0 is the
/// nominal trace; variants k > 0 re-draw the per-pulse delay jitter with a
/// fresh stream to model attack-device imprecision.
SpoofTrace SampleTraceLibrary(const LidarTimingModel& timing, int budget,
                              std::uint64_t seed, int variant = 0,
                              const SpoofOptions& options = {});

/// Snaps an arbitrary trace back onto the spoofable set: each point keeps its
/// bird's-eye position, its elevation snaps to the nearest vertical line, the
/// azimuth spread is compressed into the window and ranges are clamped to
/// [1, 100] m.
SpoofTrace RealizeTrace(const SpoofTrace& trace, const LidarTimingModel& timing);

struct CapabilityReport {
  bool budget_ok = true;
  bool span_ok = true;
  bool angles_ok = true;
  bool ranges_ok = true;
  double span_deg = 0.0;
  std::string detail;

  bool ok() const { return budget_ok && span_ok && angles_ok && ranges_ok; }
};

CapabilityReport CheckCapability(const SpoofTrace& trace,
                                 const LidarTimingModel& timing);

double MeanAzimuth(const PointCloud& cloud);      // radians
double AzimuthSpanDeg(const PointCloud& cloud);

/// Writes the cloud to `cloud_path` plus a `<cloud_path>.meta.json` sidecar.
void SaveTrace(const SpoofTrace& trace, const std::filesystem::path& cloud_path);
SpoofTrace LoadTrace(const std::filesystem::path& cloud_path);

}  // namespace advlidar
