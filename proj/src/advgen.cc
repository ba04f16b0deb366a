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

#include "advlidar/advgen.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include "advlidar/status.h"
#include "json.hpp"

namespace advlidar {
namespace {

// Point-derived channels carried by G_t and ⊕.
struct CellStats {
  double max_h = 0.0;
  double max_int = 0.0;
  double mean_h = 0.0;
  double mean_int = 0.0;
  double count = 0.0;
};

CellStats ReadCell(const FeatureGrid& g, std::size_t i) {
  return {g.channel(FeatureChannel::kMaxHeight)[i],
          g.channel(FeatureChannel::kMaxIntensity)[i],
          g.channel(FeatureChannel::kMeanHeight)[i],
          g.channel(FeatureChannel::kMeanIntensity)[i],
          g.channel(FeatureChannel::kCount)[i]};
}

void WriteCell(FeatureGrid& g, std::size_t i, const CellStats& s) {
  g.channel(FeatureChannel::kMaxHeight)[i] = s.max_h;
  g.channel(FeatureChannel::kMaxIntensity)[i] = s.max_int;
  g.channel(FeatureChannel::kMeanHeight)[i] = s.mean_h;
  g.channel(FeatureChannel::kMeanIntensity)[i] = s.mean_int;
  g.channel(FeatureChannel::kCount)[i] = s.count;
  g.channel(FeatureChannel::kNonEmpty)[i] = s.count > 0.0 ? 1.0 : 0.0;
}

CellStats MergeCell(const CellStats& x, const CellStats& t) {
  if (!(t.count > 0.0)) return x;
  if (!(x.count > 0.0)) return t;
  CellStats m;
  m.count = x.count + t.count;
  m.mean_h = (x.count * x.mean_h + t.count * t.mean_h) / m.count;
  m.mean_int = (x.count * x.mean_int + t.count * t.mean_int) / m.count;
  m.max_h = std::max(x.max_h, t.max_h);
  m.max_int = x.max_h >= t.max_h ? x.max_int : t.max_int;
  return m;
}

// Inverse of G_T in continuous grid coordinates.
class InverseMap {
 public:
  InverseMap(const TransformParams& p, const GridGeometry& geometry)
      : c_(std::cos(p.theta)),
        s_(std::sin(p.theta)),
        tau_(p.tau_x),
        range_(geometry.range),
        cs_(geometry.cell_size()) {}

  std::array<double, 2> Source(int u, int v) const {
    const double x = range_ - (u + 0.5) * cs_ - tau_;
    const double y = range_ - (v + 0.5) * cs_;
    const double sx = c_ * x + s_ * y;
    const double sy = -s_ * x + c_ * y;
    return {(range_ - sx) / cs_ - 0.5, (range_ - sy) / cs_ - 0.5};
  }

  std::array<double, 2> Forward(double gu, double gv) const {
    const double x = range_ - (gu + 0.5) * cs_;
    const double y = range_ - (gv + 0.5) * cs_;
    const double tx = c_ * x - s_ * y + tau_;
    const double ty = s_ * x + c_ * y;
    return {(range_ - tx) / cs_ - 0.5, (range_ - ty) / cs_ - 0.5};
  }

 private:
  double c_, s_, tau_, range_, cs_;
};

CellStats SampleTransformed(const FeatureGrid& t, const InverseMap& map,
                            double s_h, int u, int v) {
  const auto [su, sv] = map.Source(u, v);
  const int size = t.size();
  CellStats s;
  s.count = BilinearSample(t.channel(FeatureChannel::kCount), size, su, sv);
  if (!(s.count > 0.0)) return {};
  s.max_h = s_h * BilinearSample(t.channel(FeatureChannel::kMaxHeight), size,
                                 su, sv);
  s.max_int =
      BilinearSample(t.channel(FeatureChannel::kMaxIntensity), size, su, sv);
  s.mean_h = s_h * BilinearSample(t.channel(FeatureChannel::kMeanHeight),
                                  size, su, sv);
  s.mean_int =
      BilinearSample(t.channel(FeatureChannel::kMeanIntensity), size, su, sv);
  return s;
}

void AppendNumber(std::string& out, double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  out.append(buf, r.ptr);
}

}  // namespace

FeatureGrid Merge(const FeatureGrid& x, const FeatureGrid& t_prime) {
  if (!(x.geometry() == t_prime.geometry())) {
    Fail(ErrorCode::kInvalidArgument, "merge needs matching grid geometry");
  }
  FeatureGrid out = x;
  const std::size_t n = x.geometry().cell_count();
  for (std::size_t i = 0; i < n; ++i) {
    const CellStats t = ReadCell(t_prime, i);
    if (!(t.count > 0.0)) continue;
    WriteCell(out, i, MergeCell(ReadCell(x, i), t));
  }
  return out;
}

double BilinearSample(std::span<const double> channel, int size, double u,
                      double v) {
  if (!(u > -1.0 && v > -1.0 && u < size && v < size)) return 0.0;
  const int u0 = static_cast<int>(std::floor(u));
  const int v0 = static_cast<int>(std::floor(v));
  double sum = 0.0;
  for (int a = 0; a <= 1; ++a) {
    const int qu = u0 + a;
    if (qu < 0 || qu >= size) continue;
    const double wu = 1.0 - std::abs(u - qu);
    for (int b = 0; b <= 1; ++b) {
      const int qv = v0 + b;
      if (qv < 0 || qv >= size) continue;
      const double wv = 1.0 - std::abs(v - qv);
      sum += channel[static_cast<std::size_t>(qu) * size + qv] * wu * wv;
    }
  }
  return sum;
}

FeatureGrid TransformFeatures(const FeatureGrid& t,
                              const TransformParams& params) {
  params.Validate();
  FeatureGrid out(t.geometry());
  const InverseMap map(params, t.geometry());
  const int size = t.size();
  for (int u = 0; u < size; ++u) {
    for (int v = 0; v < size; ++v) {
      WriteCell(out, out.Offset(u, v),
                SampleTransformed(t, map, params.s_h, u, v));
    }
  }
  return out;
}

void AttackTarget::Validate(const GridGeometry& geometry) const {
  if (!std::isfinite(px) || !std::isfinite(py) || px < 0.0 || py < 0.0 ||
      px > geometry.size - 1 || py > geometry.size - 1) {
    Fail(ErrorCode::kValidation, "attack target lies outside the grid");
  }
  if (!(band_min > 0.0 && band_max > band_min)) {
    Fail(ErrorCode::kValidation, "distance band must be positive and ordered");
  }
  if (!(mask_sigma > 0.0) || !(corridor_half_width > 0.0)) {
    Fail(ErrorCode::kValidation, "mask sigma and corridor must be positive");
  }
}

std::array<double, 2> AttackTarget::World(const GridGeometry& geometry) const {
  const double cs = geometry.cell_size();
  return {geometry.range - (px + 0.5) * cs, geometry.range - (py + 0.5) * cs};
}

AttackTarget AttackTarget::Ahead(double distance_m,
                                 const GridGeometry& geometry) {
  AttackTarget t;
  const auto g = WorldToGridCoord(distance_m, 0.0, geometry);
  t.px = g[0];
  t.py = g[1];
  return t;
}

std::vector<double> GaussianMask(const AttackTarget& target, int size) {
  std::vector<double> mask(static_cast<std::size_t>(size) * size);
  const double k = 1.0 / (2.0 * target.mask_sigma * target.mask_sigma);
  for (int u = 0; u < size; ++u) {
    const double du = u - target.px;
    for (int v = 0; v < size; ++v) {
      const double dv = v - target.py;
      mask[static_cast<std::size_t>(u) * size + v] =
          std::exp(-(du * du + dv * dv) * k);
    }
  }
  return mask;
}

double AdvLoss(const DetectionGrid& dgrid, const AttackTarget& target) {
  const auto mask = GaussianMask(target, dgrid.size());
  const auto obj = dgrid.channel(Attribute::kObjectness);
  const auto pos = dgrid.channel(Attribute::kPositiveness);
  double loss = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    loss += (1.0 - pos[i] * obj[i]) * mask[i];
  }
  return loss;
}

double AdvLoss(const FeatureGrid& x_prime, const Detector& detector,
               const AttackTarget& target) {
  x_prime.ValidateFinite();
  return AdvLoss(detector.Detect(x_prime), target);
}

void SamplingSpec::Validate() const {
  if (n < 1 || max_iterations < 0) {
    Fail(ErrorCode::kValidation, "need n >= 1 and max_iterations >= 0");
  }
  if (!(l_tau > 0.0) || !(l_theta >= 0.0) || !std::isfinite(l_theta) ||
      !std::isfinite(l_tau)) {
    Fail(ErrorCode::kValidation, "sampling bounds must be positive");
  }
  if (!(learning_rate > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) ||
      !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0) ||
      !(gradient_step > 0.0) || !(min_s_h > 0.0)) {
    Fail(ErrorCode::kValidation, "invalid optimizer constants");
  }
}

double SamplingSpec::ResolvedLTheta(double target_distance_m) const {
  if (l_theta > 0.0) return l_theta;
  return std::atan2(2.0, std::max(target_distance_m, 1e-6));
}

const char* OptimizerModeName(OptimizerMode mode) {
  return mode == OptimizerMode::kVanilla ? "vanilla" : "sampling";
}

OptimizerMode ParseOptimizerMode(std::string_view name) {
  if (name == "vanilla") return OptimizerMode::kVanilla;
  if (name == "sampling") return OptimizerMode::kSampling;
  Fail(ErrorCode::kValidation,
       "mode must be vanilla or sampling, got '" + std::string(name) + "'");
}

OptimizeResult OptimizeAdam(
    const std::function<double(const TransformParams&)>& loss,
    const std::function<ParamGradient(const TransformParams&)>& gradient,
    const TransformParams& init, const SamplingSpec& spec, int start_index) {
  spec.Validate();
  OptimizeResult r;
  TransformParams p = init;
  double m[3] = {0, 0, 0};
  double v[3] = {0, 0, 0};
  double b1t = 1.0;
  double b2t = 1.0;
  bool have_best = false;

  auto record = [&](int it, double l) {
    r.trajectory.push_back({start_index, it, p, l});
    if (!std::isfinite(l)) {
      r.aborted = true;
      r.diagnostic = "non-finite loss at iteration " + std::to_string(it);
      return false;
    }
    if (!have_best || l < r.best_loss) {
      r.best_loss = l;
      r.best_params = p;
      have_best = true;
    }
    return true;
  };

  auto safe_loss = [&](const TransformParams& q) {
    try {
      return loss(q);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNumerical) throw;
      return std::numeric_limits<double>::quiet_NaN();
    }
  };

  const double l0 = safe_loss(p);
  r.initial_loss = l0;
  if (!record(0, l0)) {
    r.best_params = init;
    r.best_loss = l0;
    return r;
  }
  for (int it = 0; it < spec.max_iterations; ++it) {
    ParamGradient g;
    try {
      g = gradient(p);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNumerical) throw;
      r.aborted = true;
      r.diagnostic = std::string("gradient failed: ") + e.what();
      return r;
    }
    const double gv[3] = {g.theta, g.tau_x, g.s_h};
    if (!std::isfinite(gv[0]) || !std::isfinite(gv[1]) || !std::isfinite(gv[2])) {
      r.aborted = true;
      r.diagnostic = "non-finite gradient at iteration " + std::to_string(it);
      return r;
    }
    b1t *= spec.beta1;
    b2t *= spec.beta2;
    double step[3];
    for (int k = 0; k < 3; ++k) {
      m[k] = spec.beta1 * m[k] + (1.0 - spec.beta1) * gv[k];
      v[k] = spec.beta2 * v[k] + (1.0 - spec.beta2) * gv[k] * gv[k];
      const double mh = m[k] / (1.0 - b1t);
      const double vh = v[k] / (1.0 - b2t);
      step[k] = spec.learning_rate * mh / (std::sqrt(vh) + spec.epsilon);
    }
    p.theta = WrapAngle(p.theta - step[0]);
    p.tau_x -= step[1];
    p.s_h = std::max(p.s_h - step[2], spec.min_s_h);
    if (!record(it + 1, safe_loss(p))) return r;
  }
  return r;
}

AttackObjective::AttackObjective(const FeatureGrid& x, const FeatureGrid& t,
                                 const Detector& detector,
                                 const AttackTarget& target)
    : x_(x), t_(t), detector_(detector), target_(target), scratch_(x) {
  if (!(x.geometry() == t.geometry())) {
    Fail(ErrorCode::kInvalidArgument, "scene and trace grids differ");
  }
  target.Validate(x.geometry());
  x.ValidateFinite();
  t.ValidateFinite();
  const int size = x.size();
  mask_ = GaussianMask(target, size);
  const DetectionGrid d0 = detector.Detect(x);
  const auto obj = d0.channel(Attribute::kObjectness);
  const auto pos = d0.channel(Attribute::kPositiveness);
  base_score_.resize(mask_.size());
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    base_score_[i] = pos[i] * obj[i];
    base_loss_ += (1.0 - base_score_[i]) * mask_[i];
  }

  const auto count = t.channel(FeatureChannel::kCount);
  source_box_ = {size, -1, size, -1};
  for (int u = 0; u < size; ++u) {
    for (int v = 0; v < size; ++v) {
      if (!(count[t.Offset(u, v)] > 0.0)) continue;
      source_box_.u0 = std::min(source_box_.u0, u);
      source_box_.u1 = std::max(source_box_.u1, u);
      source_box_.v0 = std::min(source_box_.v0, v);
      source_box_.v1 = std::max(source_box_.v1, v);
    }
  }
}

CellWindow AttackObjective::Support(const TransformParams& params) const {
  if (source_box_.u1 < source_box_.u0) return {};
  const int size = x_.size();
  const InverseMap map(params, x_.geometry());
  double lo_u = std::numeric_limits<double>::infinity();
  double lo_v = lo_u;
  double hi_u = -lo_u;
  double hi_v = -lo_u;
  for (double gu : {source_box_.u0 - 1.0, source_box_.u1 + 1.0}) {
    for (double gv : {source_box_.v0 - 1.0, source_box_.v1 + 1.0}) {
      const auto f = map.Forward(gu, gv);
      lo_u = std::min(lo_u, f[0]);
      hi_u = std::max(hi_u, f[0]);
      lo_v = std::min(lo_v, f[1]);
      hi_v = std::max(hi_v, f[1]);
    }
  }
  const double lim = size + 2.0;
  lo_u = std::clamp(lo_u, -2.0, lim);
  hi_u = std::clamp(hi_u, -2.0, lim);
  lo_v = std::clamp(lo_v, -2.0, lim);
  hi_v = std::clamp(hi_v, -2.0, lim);
  CellWindow w{static_cast<int>(std::floor(lo_u)) - 1,
               static_cast<int>(std::ceil(hi_u)) + 2,
               static_cast<int>(std::floor(lo_v)) - 1,
               static_cast<int>(std::ceil(hi_v)) + 2};
  w.u0 = std::clamp(w.u0, 0, size);
  w.u1 = std::clamp(w.u1, 0, size);
  w.v0 = std::clamp(w.v0, 0, size);
  w.v1 = std::clamp(w.v1, 0, size);
  if (w.empty()) return {};
  return w;
}

double AttackObjective::Evaluate(const TransformParams& params) {
  params.Validate();
  const int radius = detector_.ReceptiveRadius();
  if (radius < 0) return EvaluateNaive(params);
  const CellWindow support = Support(params);
  if (support.empty()) return base_loss_;

  const InverseMap map(params, x_.geometry());
  for (int u = support.u0; u < support.u1; ++u) {
    for (int v = support.v0; v < support.v1; ++v) {
      const CellStats t = SampleTransformed(t_, map, params.s_h, u, v);
      if (!(t.count > 0.0)) continue;
      const std::size_t i = x_.Offset(u, v);
      WriteCell(scratch_, i, MergeCell(ReadCell(x_, i), t));
    }
  }

  const CellWindow window = support.Dilated(radius, x_.size());
  obj_.resize(window.cells());
  pos_.resize(window.cells());
  detector_.ScoreWindow(scratch_, window, obj_, pos_);

  double delta = 0.0;
  std::size_t l = 0;
  for (int u = window.u0; u < window.u1; ++u) {
    for (int v = window.v0; v < window.v1; ++v, ++l) {
      const std::size_t i = x_.Offset(u, v);
      delta += (pos_[l] * obj_[l] - base_score_[i]) * mask_[i];
    }
  }

  for (int u = support.u0; u < support.u1; ++u) {
    for (int v = support.v0; v < support.v1; ++v) {
      const std::size_t i = x_.Offset(u, v);
      WriteCell(scratch_, i, ReadCell(x_, i));
    }
  }
  const double loss = base_loss_ - delta;
  if (!std::isfinite(loss)) Fail(ErrorCode::kNumerical, "non-finite loss");
  return loss;
}

ParamGradient AttackObjective::Gradient(const TransformParams& params,
                                        double step) {
  return CentralDifference(
      [this](const TransformParams& p) { return Evaluate(p); }, params, step);
}

double AttackObjective::EvaluateNaive(const TransformParams& params) const {
  const double loss =
      AdvLoss(Merge(x_, TransformFeatures(t_, params)), detector_, target_);
  if (!std::isfinite(loss)) Fail(ErrorCode::kNumerical, "non-finite loss");
  return loss;
}

OptimizeResult VanillaOptimize(AttackObjective& objective,
                               const SamplingSpec& spec,
                               const TransformParams& init, int start_index) {
  return OptimizeAdam(
      [&](const TransformParams& p) { return objective.Evaluate(p); },
      [&](const TransformParams& p) {
        return objective.Gradient(p, spec.gradient_step);
      },
      init, spec, start_index);
}

TransformParams CenteredStart(const SpoofTrace& aligned_trace,
                              const AttackTarget& target,
                              const PreprocessConfig& preprocess) {
  const PointCloud pts =
      TransformPose(aligned_trace.points, preprocess.sensor_pose);
  double cx = 0.0;
  double cy = 0.0;
  for (const auto& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  if (!pts.empty()) {
    cx /= static_cast<double>(pts.size());
    cy /= static_cast<double>(pts.size());
  }
  const auto w = target.World(preprocess.geometry);
  const double rc = std::hypot(cx, cy);
  const double phi = std::atan2(cy, cx);
  TransformParams p;
  if (rc > 0.0) {
    p.theta = WrapAngle(std::asin(std::clamp(w[1] / rc, -1.0, 1.0)) - phi);
  }
  p.tau_x = w[0] - rc * std::cos(p.theta + phi);
  return p;
}

std::vector<TransformParams> SamplingStarts(const TransformParams& center,
                                            const SamplingSpec& spec,
                                            double target_distance_m) {
  spec.Validate();
  const double l_theta = spec.ResolvedLTheta(target_distance_m);
  auto offset = [&](int i, double bound) {
    if (spec.n == 1) return 0.0;
    return -bound + 2.0 * bound * i / (spec.n - 1);
  };
  std::vector<TransformParams> starts;
  for (int i = 0; i < spec.n; ++i) {
    for (int j = 0; j < spec.n; ++j) {
      TransformParams p = center;
      p.tau_x = center.tau_x + offset(i, spec.l_tau);
      p.theta = WrapAngle(center.theta + offset(j, l_theta));
      starts.push_back(p);
    }
  }
  if (spec.n % 2 == 0) starts.push_back(center);
  return starts;
}

SpoofTrace EmitTrace(const SpoofTrace& aligned_trace,
                     const TransformParams& params,
                     const PreprocessConfig& preprocess,
                     const LidarTimingModel& timing) {
  SpoofTrace in_frame = aligned_trace;
  in_frame.points = TransformPose(aligned_trace.points, preprocess.sensor_pose);
  in_frame.aligned = true;
  SpoofTrace moved = TransformTrace3d(in_frame, params);
  moved.points = TransformPose(moved.points, preprocess.sensor_pose.Inverse());
  return RealizeTrace(moved, timing);
}

bool IsSuccess(const PointCloud& x_prime,
               const std::vector<Obstacle>& baseline,
               const AttackConfig& config, const Detector& detector) {
  const GridGeometry& geometry = config.preprocess.geometry;
  std::vector<std::uint8_t> taken(geometry.cell_count(), 0);
  for (const auto& o : baseline) {
    for (const auto& c : o.cells) {
      taken[static_cast<std::size_t>(c.u) * geometry.size + c.v] = 1;
    }
  }
  const auto out =
      Perceive(x_prime, config.preprocess, config.perception, detector);
  const AttackTarget& t = config.target;
  for (const auto& o : out.obstacles) {
    if (o.bbox.center_x < t.band_min || o.bbox.center_x > t.band_max) continue;
    if (std::abs(o.bbox.center_y) > t.corridor_half_width) continue;
    const bool seen = std::any_of(o.cells.begin(), o.cells.end(), [&](auto c) {
      return taken[static_cast<std::size_t>(c.u) * geometry.size + c.v] != 0;
    });
    if (!seen) return true;
  }
  return false;
}

void RealizeAttack(const PointCloud& scene, const SpoofTrace& aligned_trace,
                   const TransformParams& params,
                   const std::vector<Obstacle>& baseline,
                   const AttackConfig& config, const Detector& detector,
                   AttackResult& result) {
  result.adversarial_trace =
      EmitTrace(aligned_trace, params, config.preprocess, config.timing);
  result.adversarial_cloud = Append(scene, result.adversarial_trace.points);
  result.success =
      IsSuccess(result.adversarial_cloud, baseline, config, detector);
}

AttackResult GenerateAdversarial(const PointCloud& scene,
                                 const SpoofTrace& trace,
                                 const Detector& detector,
                                 const AttackConfig& config,
                                 const std::vector<Obstacle>* baseline) {
  if (!trace.aligned) {
    Fail(ErrorCode::kPrecondition, "attack requires an aligned trace");
  }
  config.sampling.Validate();
  config.perception.Validate();
  config.target.Validate(config.preprocess.geometry);

  std::vector<Obstacle> own_baseline;
  if (baseline == nullptr) {
    own_baseline = Perceive(scene, config.preprocess, config.perception,
                            detector)
                       .obstacles;
    baseline = &own_baseline;
  }
  const FeatureGrid x = Preprocess(scene, config.preprocess).grid;
  const FeatureGrid t = Preprocess(trace.points, config.preprocess).grid;
  AttackObjective objective(x, t, detector, config.target);

  AttackResult result;
  const TransformParams center =
      CenteredStart(trace, config.target, config.preprocess);
  const auto tw = config.target.World(config.preprocess.geometry);
  const double distance = std::hypot(tw[0], tw[1]);
  if (config.mode == OptimizerMode::kVanilla) {
    result.start_params = {center};
    result.center_start = 0;
  } else {
    result.start_params = SamplingStarts(center, config.sampling, distance);
    const int n = config.sampling.n;
    result.center_start = n % 2 == 1
                              ? (n / 2) * n + n / 2
                              : static_cast<int>(result.start_params.size()) - 1;
  }

  for (std::size_t k = 0; k < result.start_params.size(); ++k) {
    OptimizeResult r = VanillaOptimize(objective, config.sampling,
                                       result.start_params[k],
                                       static_cast<int>(k));
    if (std::isfinite(r.best_loss) && r.trajectory.size() > 0 &&
        (result.best_start < 0 || r.best_loss < result.best_loss)) {
      result.best_loss = r.best_loss;
      result.best_params = r.best_params;
      result.best_start = static_cast<int>(k);
    }
    result.starts.push_back(std::move(r));
  }

  if (result.best_start < 0) {
    result.diagnostic = "every start produced a non-finite loss";
    for (const auto& r : result.starts) {
      if (!r.diagnostic.empty()) result.diagnostic += "; " + r.diagnostic;
    }
    result.best_loss = std::numeric_limits<double>::quiet_NaN();
    result.adversarial_cloud = scene;
    return result;
  }
  RealizeAttack(scene, trace, result.best_params, *baseline, config, detector,
                result);
  return result;
}

std::string TrajectoryCsv(const AttackResult& result) {
  std::string out = "start_index,iteration,theta,tau_x,s_h,loss\n";
  for (const auto& s : result.starts) {
    for (const auto& row : s.trajectory) {
      out += std::to_string(row.start_index);
      out += ',';
      out += std::to_string(row.iteration);
      out += ',';
      AppendNumber(out, row.params.theta);
      out += ',';
      AppendNumber(out, row.params.tau_x);
      out += ',';
      AppendNumber(out, row.params.s_h);
      out += ',';
      AppendNumber(out, row.loss);
      out += '\n';
    }
  }
  return out;
}

std::string AttackResultJson(const AttackResult& result) {
  nlohmann::json j = {
      {"success", result.success},
      {"best_loss", result.best_loss},
      {"best_params",
       {{"theta", result.best_params.theta},
        {"tau_x", result.best_params.tau_x},
        {"s_h", result.best_params.s_h}}},
      {"best_start", result.best_start},
      {"center_start", result.center_start},
      {"starts", result.starts.size()},
      {"trace_points", result.adversarial_trace.points.size()},
      {"trace_budget", result.adversarial_trace.budget},
      {"trace_span_deg", AzimuthSpanDeg(result.adversarial_trace.points)},
  };
  if (!result.diagnostic.empty()) j["diagnostic"] = result.diagnostic;
  return j.dump(2) + "\n";
}

}  // namespace advlidar
