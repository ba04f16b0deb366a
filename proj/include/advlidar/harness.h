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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "advlidar/advgen.h"
#include "advlidar/detector.h"
#include "advlidar/postprocess.h"
#include "advlidar/spoof.h"

namespace advlidar {

enum class Background { kEmptyRoad, kSyntheticTraffic, kFile };

const char* BackgroundName(Background b);
Background ParseBackground(std::string_view name);

/// Procedural road scenes. Boxes sit on the ground plane (z = 0 in the
/// perception frame); the sensor scans them with its own beam pattern.
struct SceneOptions {
  Background background = Background::kSyntheticTraffic;
  std::filesystem::path file;
  int parked_min = 2;
  int parked_max = 6;
  double parked_y_min = 4.0;  // |y| of parked-vehicle centers
  double parked_y_max = 5.2;
  double lead_probability = 0.5;
  double lead_x_min = 20.0;
  double lead_x_max = 40.0;
  double lead_speed_mps = 3.0;  // relative to the ego vehicle
  /// Small roadside objects (cones, debris, shrubs) near the front of the
  /// ego vehicle; on their own they stay below the detection threshold.
  int clutter_min = 0;
  int clutter_max = 2;
  double clutter_x_min = 4.0;
  double clutter_x_max = 6.0;
  double clutter_y_abs_min = 0.9;  // cones and debris hug the lane edges
  double clutter_y_abs_max = 1.6;
  double range_noise_sigma = 0.01;

  void Validate() const;
};

enum class BoxKind { kVehicle, kClutter };

struct WorldBox {
  BoxKind kind = BoxKind::kVehicle;
  double center_x = 0.0;
  double center_y = 0.0;
  double length = 4.0;
  double width = 1.8;
  double height = 1.5;
  double intensity = 0.4;
  double velocity_x = 0.0;
};

struct World {
  std::vector<WorldBox> boxes;
};

World GenerateWorld(const SceneOptions& options, std::uint64_t seed);

/// A scanned frame: the sensor-frame cloud plus, per point, the index of the
/// box it hit (-1 for ground or file points).
struct SceneFrame {
  PointCloud cloud;
  std::vector<int> owner;
  World world;
};

SceneFrame ScanWorld(const World& world, const LidarTimingModel& timing,
                     const Pose& sensor_pose, double range_noise_sigma,
                     std::uint64_t seed);

/// The frame `offset` steps later: points of moving boxes drift by
/// velocity * offset * dt and every point gets N(0, sigma) jitter per axis.
/// Offset 0 with sigma 0 returns the cloud unchanged.
PointCloud PerturbFrame(const SceneFrame& frame, int offset, double dt,
                        double sigma, std::uint64_t seed);

struct DecisionConfig {
  double corridor_half_width = 1.75;
  double side_pass_min_distance = 15.0;
};

enum class Decision { kProceed, kStop };

const char* DecisionName(Decision d);

struct DecisionState {
  Decision decision = Decision::kProceed;
  std::optional<double> nearest_front_obstacle_distance;
};

/// STOP iff some obstacle center lies ahead inside the corridor closer than
/// the side-pass minimum.
DecisionState Decide(const std::vector<Obstacle>& obstacles,
                     const DecisionConfig& config);

enum class ScenarioKind { kEmergencyBrake, kAvFreezing };

const char* ScenarioName(ScenarioKind kind);
ScenarioKind ParseScenario(std::string_view name);

struct ScenarioOptions {
  int frame_count = 20;
  /// First attacked frame for emergency_brake; av_freezing attacks all.
  int attack_start_frame = 5;
  double ego_speed_mps = 12.0;
  int budget = 60;
  /// Library traces the attacker may try while planning.
  int plan_attempts = 10;
  Background background = Background::kEmptyRoad;
};

struct HarnessConfig {
  std::uint64_t seed = 1;
  SurrogateParams detector = SurrogateParams::Default();
  AttackConfig attack;
  SpoofOptions spoof;
  SceneOptions scene;
  DecisionConfig decision;
  int scenes = 50;
  std::vector<int> budgets = {20, 40, 60};
  std::vector<OptimizerMode> modes = {OptimizerMode::kVanilla,
                                      OptimizerMode::kSampling};
  bool include_control = true;
  int robustness_scenes = 10;
  int frames = 15;
  double frame_dt = 0.1;
  double jitter_sigma = 0.02;
  int resamples = 5;
  ScenarioOptions scenario;

  void Validate() const;
};

/// Documented keys only; unknown keys are rejected so typos surface.
HarnessConfig ParseHarnessConfig(std::string_view json_text);
HarnessConfig LoadHarnessConfig(const std::filesystem::path& path);
std::string HarnessConfigToJson(const HarnessConfig& config);

/// The i-th seeded scene of an experiment.
SceneFrame MakeScene(const HarnessConfig& config, int index);
/// The aligned library trace used against scene `index`.
SpoofTrace MakeTrace(const HarnessConfig& config, int index, int budget,
                     int variant = 0);

struct SceneAttackRecord {
  int scene = 0;
  int budget = 0;
  OptimizerMode mode = OptimizerMode::kSampling;
  bool success = false;
  double best_loss = 0.0;
  TransformParams params;
  std::size_t trace_points = 0;
  CapabilityReport capability;
};

struct SuccessRow {
  int budget = 0;
  OptimizerMode mode = OptimizerMode::kSampling;
  int scenes = 0;
  int successes = 0;
  double rate = 0.0;
};

struct SuccessTable {
  std::vector<SuccessRow> rows;
  std::vector<SceneAttackRecord> records;

  /// budget,mode,scenes,successes,rate
  std::string ToCsv() const;
  /// scene,budget,mode,success,best_loss,theta,tau_x,s_h,trace_points,
  /// capability_ok,span_deg
  std::string RecordsCsv() const;
  double Rate(int budget, OptimizerMode mode) const;
};

SuccessTable RunSuccessExperiment(const HarnessConfig& config,
                                  const Detector& detector);

/// A successful attack together with everything needed to replay it.
struct AdversarialCase {
  int scene = 0;
  int budget = 0;
  SceneFrame frame;
  SpoofTrace aligned_trace;
  TransformParams params;
  SpoofTrace emitted;
  std::vector<Obstacle> baseline;
};

/// Sampling attacks on the first `robustness_scenes` scenes; keeps the
/// successful ones.
std::vector<AdversarialCase> CollectSuccessfulAttacks(
    const HarnessConfig& config, const Detector& detector, int budget);

struct FrameRobustnessRow {
  int budget = 0;
  int offset = 0;
  int attacks = 0;
  int successes = 0;
  double rate = 0.0;
};

/// Replays each emitted T' unchanged on `config.frames` consecutive perturbed
/// frames (offset 0 is the attacked frame).
std::vector<FrameRobustnessRow> RunFrameRobustness(
    const std::vector<AdversarialCase>& cases, const HarnessConfig& config,
    const Detector& detector, int budget);

struct TraceRobustnessRow {
  int budget = 0;
  int resample = 0;
  int attacks = 0;
  int successes = 0;
  double rate = 0.0;
};

/// Re-draws `config.resamples` traces per attack with fresh device noise and
/// applies the same transform.
std::vector<TraceRobustnessRow> RunTraceRobustness(
    const std::vector<AdversarialCase>& cases, const HarnessConfig& config,
    const Detector& detector, int budget);

/// budget,offset,attacks,successes,rate
std::string FrameRobustnessCsv(const std::vector<FrameRobustnessRow>& rows);
/// budget,resample,attacks,successes,rate
std::string TraceRobustnessCsv(const std::vector<TraceRobustnessRow>& rows);

struct TimelineRow {
  int frame = 0;
  bool attacked = false;
  Decision decision = Decision::kProceed;
  std::optional<double> nearest_front_obstacle_distance;
};

struct ScenarioResult {
  ScenarioKind kind = ScenarioKind::kAvFreezing;
  bool attack_applied = false;
  bool attack_success = false;
  int plan_trace = -1;  // library trace index of the emitted plan
  std::vector<TimelineRow> timeline;

  /// frame,attacked,decision,nearest_front_m
  std::string ToCsv() const;
  int StopFrames() const;
};

ScenarioResult RunScenario(ScenarioKind kind, const HarnessConfig& config,
                           const Detector& detector, bool apply_attack = true);

}  // namespace advlidar
