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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "advlidar/detector.h"
#include "advlidar/feature_grid.h"
#include "advlidar/point_cloud.h"
#include "advlidar/postprocess.h"
#include "advlidar/preprocess.h"
#include "advlidar/spoof.h"
#include "advlidar/transform_params.h"

namespace advlidar {

/// x ⊕ t': counts add, means are count-weighted, max height is the larger one
/// and max intensity follows the higher of the two max heights (ties keep x).
/// An operand with zero count contributes nothing. Throws kInvalidArgument on
/// a geometry mismatch.
FeatureGrid Merge(const FeatureGrid& x, const FeatureGrid& t_prime);

/// Bilinear read of a size x size row-major channel at continuous (u, v);
/// neighbors outside the grid read as zero.
double BilinearSample(std::span<const double> channel, int size, double u,
                      double v);

/// G_t: each output cell samples t at the inverse-mapped source position.
/// Height channels are scaled by s_h, the count stays continuous, non_empty
/// is recomputed from it and direction/distance keep their constants.
FeatureGrid TransformFeatures(const FeatureGrid& t,
                              const TransformParams& params);

/// Where the attack wants the fake obstacle. (px, py) are continuous grid
/// coordinates (u, v) of the mask center.
struct AttackTarget {
  double px = 0.0;
  double py = 0.0;
  double band_min = 2.0;  // meters ahead
  double band_max = 8.0;
  double mask_sigma = 8.0;  // cells
  double corridor_half_width = 1.75;

  void Validate(const GridGeometry& geometry) const;
  /// World (x, y) of the mask center.
  std::array<double, 2> World(const GridGeometry& geometry) const;

  /// On the x-axis, distance_m ahead of the sensor.
  static AttackTarget Ahead(double distance_m, const GridGeometry& geometry);
};

/// Unnormalized Gaussian with peak 1 at (px, py), over the whole grid.
std::vector<double> GaussianMask(const AttackTarget& target, int size);

/// Σ (1 - positiveness * objectness) * mask over every cell.
double AdvLoss(const DetectionGrid& dgrid, const AttackTarget& target);
double AdvLoss(const FeatureGrid& x_prime, const Detector& detector,
               const AttackTarget& target);

struct SamplingSpec {
  double l_tau = 12.5;  // meters
  /// Radians; zero means the angle that moves the target point 2 m sideways.
  double l_theta = 0.0;
  int n = 5;
  int max_iterations = 100;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double gradient_step = 1e-3;
  double min_s_h = 1e-3;

  void Validate() const;
  double ResolvedLTheta(double target_distance_m) const;
};

enum class OptimizerMode { kVanilla, kSampling };

const char* OptimizerModeName(OptimizerMode mode);
/// Throws kValidation for anything but "vanilla" or "sampling".
OptimizerMode ParseOptimizerMode(std::string_view name);

struct TrajectoryRow {
  int start_index = 0;
  int iteration = 0;
  TransformParams params;
  double loss = 0.0;
};

struct OptimizeResult {
  TransformParams best_params;
  double best_loss = 0.0;
  double initial_loss = 0.0;
  bool aborted = false;
  std::string diagnostic;
  /// Row k is the iterate before step k; the last row is the final iterate.
  std::vector<TrajectoryRow> trajectory;
};

/// Adam on (theta, tau_x, s_h) for an arbitrary loss and gradient; keeps the
/// best parameters seen. A non-finite loss or gradient ends the run with
/// aborted set.
OptimizeResult OptimizeAdam(
    const std::function<double(const TransformParams&)>& loss,
    const std::function<ParamGradient(const TransformParams&)>& gradient,
    const TransformParams& init, const SamplingSpec& spec,
    int start_index = 0);

/// L_adv(x ⊕ G_t(params; t)). Evaluation only touches the cells the spoofed
/// grid can reach, dilated by the detector's receptive radius, and falls back
/// to the full pipeline when the detector reports no finite radius. Holds a
/// scratch copy of x, so one instance must not be shared across threads.
class AttackObjective {
 public:
  AttackObjective(const FeatureGrid& x, const FeatureGrid& t,
                  const Detector& detector, const AttackTarget& target);

  double Evaluate(const TransformParams& params);
  ParamGradient Gradient(const TransformParams& params, double step);

  /// Full merge, full detection, full loss. Slow; used as the oracle.
  double EvaluateNaive(const TransformParams& params) const;

  /// Output cells G_t(params; t) can make nonzero.
  CellWindow Support(const TransformParams& params) const;

 private:
  const FeatureGrid& x_;
  const FeatureGrid& t_;
  const Detector& detector_;
  AttackTarget target_;
  std::vector<double> mask_;
  std::vector<double> base_score_;  // positiveness * objectness on x
  double base_loss_ = 0.0;
  CellWindow source_box_;  // cells of t with nonzero count, inclusive bounds
  FeatureGrid scratch_;
  std::vector<double> obj_;
  std::vector<double> pos_;
};

OptimizeResult VanillaOptimize(AttackObjective& objective,
                               const SamplingSpec& spec,
                               const TransformParams& init,
                               int start_index = 0);

struct AttackConfig {
  PreprocessConfig preprocess;
  PerceptionConfig perception;
  AttackTarget target = AttackTarget::Ahead(5.0, GridGeometry{});
  SamplingSpec sampling;
  OptimizerMode mode = OptimizerMode::kSampling;
  LidarTimingModel timing = LidarTimingModel::Vlp16();
};

struct AttackResult {
  TransformParams best_params;
  double best_loss = 0.0;
  bool success = false;
  SpoofTrace adversarial_trace;  // realized, sensor frame
  PointCloud adversarial_cloud;  // X + T'
  std::vector<OptimizeResult> starts;
  std::vector<TransformParams> start_params;
  int best_start = -1;
  /// Index of the start that places t on the target.
  int center_start = -1;
  std::string diagnostic;
};

/// The (theta, tau_x) that carry the trace's centroid onto the target.
TransformParams CenteredStart(const SpoofTrace& aligned_trace,
                              const AttackTarget& target,
                              const PreprocessConfig& preprocess);

/// Starting points: an n x n grid over Target_tau ± l_tau and
/// Target_theta ± l_theta, row-major in tau. Even n gets the centered start
/// appended so sampling never loses to the vanilla start.
std::vector<TransformParams> SamplingStarts(const TransformParams& center,
                                            const SamplingSpec& spec,
                                            double target_distance_m);

/// T' = G_T(params; T) applied in the perception frame, snapped back onto the
/// spoofing capability and returned in the sensor frame.
SpoofTrace EmitTrace(const SpoofTrace& aligned_trace,
                     const TransformParams& params,
                     const PreprocessConfig& preprocess,
                     const LidarTimingModel& timing);

/// True when perceive(X') has an obstacle inside the target band and lane
/// corridor that shares no cell with any obstacle of `baseline`.
bool IsSuccess(const PointCloud& x_prime,
               const std::vector<Obstacle>& baseline,
               const AttackConfig& config, const Detector& detector);

/// Builds T', X' and the success flag for chosen parameters.
void RealizeAttack(const PointCloud& scene, const SpoofTrace& aligned_trace,
                   const TransformParams& params,
                   const std::vector<Obstacle>& baseline,
                   const AttackConfig& config, const Detector& detector,
                   AttackResult& result);

/// Sampling + optimization (or a single centered start in vanilla mode) on
/// x = Φ(X), t = Φ(T). `scene` is in the sensor frame; `trace` must be
/// aligned. `baseline` are the obstacles of perceive(X); computed when null.
AttackResult GenerateAdversarial(const PointCloud& scene,
                                 const SpoofTrace& trace,
                                 const Detector& detector,
                                 const AttackConfig& config,
                                 const std::vector<Obstacle>* baseline = nullptr);

/// CSV with header start_index,iteration,theta,tau_x,s_h,loss.
std::string TrajectoryCsv(const AttackResult& result);
/// Structured-text summary of an attack.
std::string AttackResultJson(const AttackResult& result);

}  // namespace advlidar
