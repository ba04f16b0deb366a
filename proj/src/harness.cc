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

#include "advlidar/harness.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "advlidar/status.h"
#include "json.hpp"
#include "random.h"

namespace advlidar {
namespace {

using nlohmann::json;

constexpr std::uint64_t kSceneTag = 0x7363656e65ULL;
constexpr std::uint64_t kScanTag = 0x7363616eULL;
constexpr std::uint64_t kTraceTag = 0x7472616365ULL;
constexpr std::uint64_t kFrameTag = 0x6672616d65ULL;
constexpr double kMaxScanRange = 100.0;

void AppendNumber(std::string& out, double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  out.append(buf, r.ptr);
}

// Ray-box slab test; returns the entry distance or +inf.
double HitBox(const WorldBox& b, const double o[3], const double d[3]) {
  const double lo[3] = {b.center_x - b.length / 2, b.center_y - b.width / 2,
                        0.0};
  const double hi[3] = {b.center_x + b.length / 2, b.center_y + b.width / 2,
                        b.height};
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (o[k] < lo[k] || o[k] > hi[k]) return t1;
      continue;
    }
    double a = (lo[k] - o[k]) / d[k];
    double c = (hi[k] - o[k]) / d[k];
    if (a > c) std::swap(a, c);
    t0 = std::max(t0, a);
    t1 = std::min(t1, c);
    if (t0 > t1) return std::numeric_limits<double>::infinity();
  }
  return t0 > 0.0 ? t0 : std::numeric_limits<double>::infinity();
}

void RejectUnknownKeys(const json& j, std::initializer_list<const char*> keys,
                       const std::string& where) {
  if (!j.is_object()) Fail(ErrorCode::kValidation, where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.contains(k)) {
      Fail(ErrorCode::kValidation, "unknown key '" + k + "' in " + where);
    }
  }
}

template <typename T>
void Read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

SurrogateParams ReadDetector(const json& j) {
  return ParseSurrogateParams(j.dump());
}

int RandomInt(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool Overlaps(const WorldBox& a, const WorldBox& b, double gap) {
  return std::abs(a.center_x - b.center_x) < (a.length + b.length) / 2 + gap &&
         std::abs(a.center_y - b.center_y) < (a.width + b.width) / 2 + gap;
}

std::string Distance(const std::optional<double>& d) {
  if (!d) return "";
  std::string s;
  AppendNumber(s, *d);
  return s;
}

}  // namespace

const char* BackgroundName(Background b) {
  switch (b) {
    case Background::kEmptyRoad: return "empty_road";
    case Background::kSyntheticTraffic: return "synthetic_traffic";
    case Background::kFile: return "file";
  }
  return "unknown";
}

Background ParseBackground(std::string_view name) {
  if (name == "empty_road") return Background::kEmptyRoad;
  if (name == "synthetic_traffic") return Background::kSyntheticTraffic;
  if (name == "file") return Background::kFile;
  Fail(ErrorCode::kValidation, "unknown background '" + std::string(name) + "'");
}

void SceneOptions::Validate() const {
  if (parked_min < 0 || parked_max < parked_min || clutter_min < 0 ||
      clutter_max < clutter_min) {
    Fail(ErrorCode::kValidation, "scene object counts must be ordered and >= 0");
  }
  if (!(lead_probability >= 0.0 && lead_probability <= 1.0)) {
    Fail(ErrorCode::kValidation, "lead_probability must lie in [0, 1]");
  }
  if (!(clutter_y_abs_min >= 0.0 && clutter_y_abs_max >= clutter_y_abs_min) ||
      !(clutter_x_max >= clutter_x_min)) {
    Fail(ErrorCode::kValidation, "clutter placement ranges must be ordered");
  }
  if (!(range_noise_sigma >= 0.0)) {
    Fail(ErrorCode::kValidation, "range_noise_sigma must be >= 0");
  }
  if (background == Background::kFile && file.empty()) {
    Fail(ErrorCode::kValidation, "file background needs scene.file");
  }
}

World GenerateWorld(const SceneOptions& options, std::uint64_t seed) {
  options.Validate();
  World world;
  if (options.background != Background::kSyntheticTraffic) return world;
  std::mt19937_64 rng(seed);

  auto place = [&](WorldBox b) {
    for (const auto& o : world.boxes) {
      if (Overlaps(o, b, 0.5)) return false;
    }
    world.boxes.push_back(b);
    return true;
  };

  const int parked = RandomInt(rng, options.parked_min, options.parked_max);
  for (int i = 0, tries = 0; i < parked && tries < 50 * (parked + 1); ++tries) {
    WorldBox b;
    b.kind = BoxKind::kVehicle;
    b.length = Uniform(rng, 4.0, 4.8);
    b.width = Uniform(rng, 1.75, 2.0);
    b.height = Uniform(rng, 1.4, 1.7);
    b.intensity = Uniform(rng, 0.2, 0.6);
    const double side = Uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    b.center_y = side * Uniform(rng, options.parked_y_min, options.parked_y_max);
    b.center_x = Uniform(rng, -20.0, 40.0);
    if (place(b)) ++i;
  }
  if (Uniform(rng, 0.0, 1.0) < options.lead_probability) {
    WorldBox b;
    b.length = Uniform(rng, 4.0, 4.8);
    b.width = Uniform(rng, 1.75, 2.0);
    b.height = Uniform(rng, 1.4, 1.7);
    b.intensity = Uniform(rng, 0.2, 0.6);
    b.center_x = Uniform(rng, options.lead_x_min, options.lead_x_max);
    b.center_y = Uniform(rng, -0.3, 0.3);
    b.velocity_x = options.lead_speed_mps;
    place(b);
  }
  const int clutter = RandomInt(rng, options.clutter_min, options.clutter_max);
  for (int i = 0, tries = 0; i < clutter && tries < 50 * (clutter + 1);
       ++tries) {
    WorldBox b;
    b.kind = BoxKind::kClutter;
    b.length = Uniform(rng, 0.3, 0.8);
    b.width = Uniform(rng, 0.3, 0.8);
    b.height = Uniform(rng, 0.3, 1.0);
    b.intensity = Uniform(rng, 0.2, 0.8);
    b.center_x = Uniform(rng, options.clutter_x_min, options.clutter_x_max);
    const double side = Uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    b.center_y = side * Uniform(rng, options.clutter_y_abs_min,
                                options.clutter_y_abs_max);
    if (place(b)) ++i;
  }
  return world;
}

SceneFrame ScanWorld(const World& world, const LidarTimingModel& timing,
                     const Pose& sensor_pose, double range_noise_sigma,
                     std::uint64_t seed) {
  timing.Validate();
  ValidatePose(sensor_pose);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> ground_int(0.05, 0.2);

  const int columns =
      static_cast<int>(std::lround(360.0 / timing.azimuth_resolution_deg));
  const Eigen::Vector3d origin = sensor_pose.translation;
  SceneFrame frame;
  frame.world = world;
  std::vector<Point> points;
  for (int col = 0; col < columns; ++col) {
    const double az = DegToRad(col * timing.azimuth_resolution_deg);
    for (double el_deg : timing.vertical_angles) {
      const double el = DegToRad(el_deg);
      const Eigen::Vector3d ds(std::cos(el) * std::cos(az),
                               std::cos(el) * std::sin(az), std::sin(el));
      const Eigen::Vector3d dw = sensor_pose.rotation * ds;
      const double o[3] = {origin.x(), origin.y(), origin.z()};
      const double d[3] = {dw.x(), dw.y(), dw.z()};
      double best = std::numeric_limits<double>::infinity();
      int owner = -1;
      double intensity = 0.0;
      if (d[2] < -1e-12) {
        best = -o[2] / d[2];
        intensity = ground_int(rng);
      }
      for (std::size_t k = 0; k < world.boxes.size(); ++k) {
        const double t = HitBox(world.boxes[k], o, d);
        if (t < best) {
          best = t;
          owner = static_cast<int>(k);
          intensity = world.boxes[k].intensity;
        }
      }
      if (!(best < kMaxScanRange)) continue;
      const double r = best + range_noise_sigma * noise(rng);
      if (!(r > 0.0)) continue;
      const Eigen::Vector3d p = ds * r;
      points.push_back({p.x(), p.y(), p.z(), intensity});
      frame.owner.push_back(owner);
    }
  }
  frame.cloud = PointCloud(std::move(points));
  return frame;
}

PointCloud PerturbFrame(const SceneFrame& frame, int offset, double dt,
                        double sigma, std::uint64_t seed) {
  if (offset < 0 || !(dt >= 0.0) || !(sigma >= 0.0)) {
    Fail(ErrorCode::kValidation, "need offset >= 0, dt >= 0 and sigma >= 0");
  }
  std::mt19937_64 rng(MixSeed(seed, {kFrameTag, static_cast<std::uint64_t>(offset)}));
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::vector<Point> out;
  out.reserve(frame.cloud.size());
  for (std::size_t i = 0; i < frame.cloud.size(); ++i) {
    Point p = frame.cloud[i];
    const int k = i < frame.owner.size() ? frame.owner[i] : -1;
    if (k >= 0) p.x += frame.world.boxes[k].velocity_x * offset * dt;
    if (sigma > 0.0) {
      p.x += sigma * jitter(rng);
      p.y += sigma * jitter(rng);
      p.z += sigma * jitter(rng);
    }
    out.push_back(p);
  }
  return PointCloud(std::move(out));
}

const char* DecisionName(Decision d) {
  return d == Decision::kStop ? "STOP" : "PROCEED";
}

DecisionState Decide(const std::vector<Obstacle>& obstacles,
                     const DecisionConfig& config) {
  DecisionState s;
  for (const auto& o : obstacles) {
    if (o.bbox.center_x <= 0.0) continue;
    if (std::abs(o.bbox.center_y) > config.corridor_half_width) continue;
    if (!s.nearest_front_obstacle_distance ||
        o.bbox.center_x < *s.nearest_front_obstacle_distance) {
      s.nearest_front_obstacle_distance = o.bbox.center_x;
    }
  }
  if (s.nearest_front_obstacle_distance &&
      *s.nearest_front_obstacle_distance < config.side_pass_min_distance) {
    s.decision = Decision::kStop;
  }
  return s;
}

const char* ScenarioName(ScenarioKind kind) {
  return kind == ScenarioKind::kEmergencyBrake ? "emergency_brake"
                                               : "av_freezing";
}

ScenarioKind ParseScenario(std::string_view name) {
  if (name == "emergency_brake") return ScenarioKind::kEmergencyBrake;
  if (name == "av_freezing") return ScenarioKind::kAvFreezing;
  Fail(ErrorCode::kValidation, "unknown scenario '" + std::string(name) + "'");
}

void HarnessConfig::Validate() const {
  detector.Validate();
  attack.sampling.Validate();
  attack.perception.Validate();
  attack.preprocess.roi.Validate();
  ValidatePose(attack.preprocess.sensor_pose);
  attack.target.Validate(attack.preprocess.geometry);
  attack.timing.Validate();
  scene.Validate();
  if (scenes < 1 || robustness_scenes < 0 || frames < 1 || resamples < 1) {
    Fail(ErrorCode::kValidation,
         "need scenes >= 1, frames >= 1, resamples >= 1");
  }
  if (budgets.empty() || modes.empty()) {
    Fail(ErrorCode::kValidation, "budgets and modes must be non-empty");
  }
  for (int b : budgets) {
    if (!IsValidBudget(b)) Fail(ErrorCode::kValidation, "budget must be 20, 40 or 60");
  }
  if (!(frame_dt > 0.0) || !(jitter_sigma >= 0.0)) {
    Fail(ErrorCode::kValidation, "need frame_dt > 0 and jitter_sigma >= 0");
  }
  if (!(spoof.intensity >= 0.0 && spoof.intensity <= 1.0) ||
      !(spoof.azimuth_window_deg > 0.0 && spoof.azimuth_window_deg <= 8.0)) {
    Fail(ErrorCode::kValidation,
         "spoof intensity must lie in [0, 1] and window in (0, 8] degrees");
  }
  if (scenario.frame_count < 1 || scenario.attack_start_frame < 0 ||
      scenario.plan_attempts < 1 ||
      !IsValidBudget(scenario.budget) || !(scenario.ego_speed_mps >= 0.0)) {
    Fail(ErrorCode::kValidation, "invalid scenario options");
  }
  if (!(decision.corridor_half_width > 0.0) ||
      !(decision.side_pass_min_distance > 0.0)) {
    Fail(ErrorCode::kValidation, "decision distances must be positive");
  }
}

HarnessConfig ParseHarnessConfig(std::string_view json_text) {
  HarnessConfig c;
  try {
    const json j = json::parse(json_text);
    RejectUnknownKeys(j,
                      {"seed", "detector", "scenes", "budgets", "modes",
                       "include_control", "robustness_scenes", "frames",
                       "frame_dt", "jitter_sigma", "resamples", "target",
                       "sampling", "perception", "roi", "grid",
                       "sensor_height", "spoof", "scene", "decision",
                       "scenario"},
                      "config");
    Read(j, "seed", c.seed);
    if (j.contains("detector")) c.detector = ReadDetector(j.at("detector"));
    Read(j, "scenes", c.scenes);
    Read(j, "budgets", c.budgets);
    if (j.contains("modes")) {
      c.modes.clear();
      for (const auto& m : j.at("modes")) {
        c.modes.push_back(ParseOptimizerMode(m.get<std::string>()));
      }
    }
    Read(j, "include_control", c.include_control);
    Read(j, "robustness_scenes", c.robustness_scenes);
    Read(j, "frames", c.frames);
    Read(j, "frame_dt", c.frame_dt);
    Read(j, "jitter_sigma", c.jitter_sigma);
    Read(j, "resamples", c.resamples);

    auto& pre = c.attack.preprocess;
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      RejectUnknownKeys(g, {"size", "range"}, "grid");
      Read(g, "size", pre.geometry.size);
      Read(g, "range", pre.geometry.range);
      if (pre.geometry.size < 1 || !(pre.geometry.range > 0.0)) {
        Fail(ErrorCode::kValidation, "grid size and range must be positive");
      }
    }
    if (j.contains("sensor_height")) {
      pre.sensor_pose =
          Pose::Translation(0.0, 0.0, j.at("sensor_height").get<double>());
    }
    if (j.contains("roi")) {
      const auto& r = j.at("roi");
      RejectUnknownKeys(r, {"mode", "range", "rectangle"}, "roi");
      Read(r, "range", pre.roi.range);
      const std::string mode = r.value("mode", std::string("all_within_range"));
      if (mode == "all_within_range") {
        pre.roi.mode = RoiSpec::Mode::kAllWithinRange;
      } else if (mode == "rectangle") {
        pre.roi.mode = RoiSpec::Mode::kRectangle;
        const auto v = r.at("rectangle").get<std::vector<double>>();
        if (v.size() != 4) {
          Fail(ErrorCode::kValidation, "roi.rectangle needs 4 numbers");
        }
        pre.roi.rectangle = Rectangle{v[0], v[1], v[2], v[3]};
      } else {
        Fail(ErrorCode::kValidation, "unknown roi mode '" + mode + "'");
      }
    }

    double distance = 5.0;
    double lateral = 0.0;
    AttackTarget& t = c.attack.target;
    if (j.contains("target")) {
      const auto& tj = j.at("target");
      RejectUnknownKeys(tj, {"distance", "lateral", "band_min", "band_max",
                             "mask_sigma", "corridor_half_width"},
                        "target");
      Read(tj, "distance", distance);
      Read(tj, "lateral", lateral);
      Read(tj, "band_min", t.band_min);
      Read(tj, "band_max", t.band_max);
      Read(tj, "mask_sigma", t.mask_sigma);
      Read(tj, "corridor_half_width", t.corridor_half_width);
    }
    if (!(std::abs(distance) < pre.geometry.range &&
          std::abs(lateral) < pre.geometry.range)) {
      Fail(ErrorCode::kValidation, "target lies outside the grid");
    }
    const auto g = WorldToGridCoord(distance, lateral, pre.geometry);
    t.px = g[0];
    t.py = g[1];

    if (j.contains("sampling")) {
      const auto& s = j.at("sampling");
      RejectUnknownKeys(s, {"l_tau", "l_theta", "n", "max_iterations",
                            "learning_rate", "beta1", "beta2", "epsilon",
                            "gradient_step"},
                        "sampling");
      auto& sp = c.attack.sampling;
      Read(s, "l_tau", sp.l_tau);
      Read(s, "l_theta", sp.l_theta);
      Read(s, "n", sp.n);
      Read(s, "max_iterations", sp.max_iterations);
      Read(s, "learning_rate", sp.learning_rate);
      Read(s, "beta1", sp.beta1);
      Read(s, "beta2", sp.beta2);
      Read(s, "epsilon", sp.epsilon);
      Read(s, "gradient_step", sp.gradient_step);
    }
    if (j.contains("perception")) {
      const auto& p = j.at("perception");
      RejectUnknownKeys(p, {"objectness_threshold", "positiveness_threshold",
                            "connectivity"},
                        "perception");
      auto& pc = c.attack.perception;
      Read(p, "objectness_threshold", pc.objectness_threshold);
      Read(p, "positiveness_threshold", pc.positiveness_threshold);
      if (p.contains("connectivity")) {
        const int k = p.at("connectivity").get<int>();
        if (k != 4 && k != 8) {
          Fail(ErrorCode::kValidation, "connectivity must be 4 or 8");
        }
        pc.connectivity = k == 4 ? Connectivity::kFour : Connectivity::kEight;
      }
    }
    if (j.contains("spoof")) {
      const auto& s = j.at("spoof");
      RejectUnknownKeys(s, {"intensity", "azimuth_window_deg"}, "spoof");
      Read(s, "intensity", c.spoof.intensity);
      Read(s, "azimuth_window_deg", c.spoof.azimuth_window_deg);
    }
    if (j.contains("scene")) {
      const auto& s = j.at("scene");
      RejectUnknownKeys(
          s,
          {"background", "file", "parked_min", "parked_max", "parked_y_min",
           "parked_y_max", "lead_probability", "lead_x_min", "lead_x_max",
           "lead_speed_mps", "clutter_min", "clutter_max", "clutter_x_min",
           "clutter_x_max", "clutter_y_abs_min", "clutter_y_abs_max",
           "range_noise_sigma"},
          "scene");
      auto& so = c.scene;
      if (s.contains("background")) {
        so.background = ParseBackground(s.at("background").get<std::string>());
      }
      if (s.contains("file")) so.file = s.at("file").get<std::string>();
      Read(s, "parked_min", so.parked_min);
      Read(s, "parked_max", so.parked_max);
      Read(s, "parked_y_min", so.parked_y_min);
      Read(s, "parked_y_max", so.parked_y_max);
      Read(s, "lead_probability", so.lead_probability);
      Read(s, "lead_x_min", so.lead_x_min);
      Read(s, "lead_x_max", so.lead_x_max);
      Read(s, "lead_speed_mps", so.lead_speed_mps);
      Read(s, "clutter_min", so.clutter_min);
      Read(s, "clutter_max", so.clutter_max);
      Read(s, "clutter_x_min", so.clutter_x_min);
      Read(s, "clutter_x_max", so.clutter_x_max);
      Read(s, "clutter_y_abs_min", so.clutter_y_abs_min);
      Read(s, "clutter_y_abs_max", so.clutter_y_abs_max);
      Read(s, "range_noise_sigma", so.range_noise_sigma);
    }
    if (j.contains("decision")) {
      const auto& d = j.at("decision");
      RejectUnknownKeys(d, {"corridor_half_width", "side_pass_min_distance"},
                        "decision");
      Read(d, "corridor_half_width", c.decision.corridor_half_width);
      Read(d, "side_pass_min_distance", c.decision.side_pass_min_distance);
    }
    if (j.contains("scenario")) {
      const auto& s = j.at("scenario");
      RejectUnknownKeys(s, {"frame_count", "attack_start_frame",
                            "ego_speed_mps", "budget", "plan_attempts",
                            "background"},
                        "scenario");
      Read(s, "frame_count", c.scenario.frame_count);
      Read(s, "attack_start_frame", c.scenario.attack_start_frame);
      Read(s, "ego_speed_mps", c.scenario.ego_speed_mps);
      Read(s, "budget", c.scenario.budget);
      Read(s, "plan_attempts", c.scenario.plan_attempts);
      if (s.contains("background")) {
        c.scenario.background =
            ParseBackground(s.at("background").get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("config: ") + e.what());
  }
  c.Validate();
  return c;
}

HarnessConfig LoadHarnessConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  HarnessConfig c = ParseHarnessConfig(ss.str());
  if (!c.scene.file.empty() && c.scene.file.is_relative()) {
    c.scene.file = path.parent_path() / c.scene.file;
  }
  return c;
}

std::string HarnessConfigToJson(const HarnessConfig& c) {
  const auto& pre = c.attack.preprocess;
  const auto tw = c.attack.target.World(pre.geometry);
  json modes = json::array();
  for (auto m : c.modes) modes.push_back(OptimizerModeName(m));
  json roi = {{"mode", pre.roi.mode == RoiSpec::Mode::kRectangle
                           ? "rectangle"
                           : "all_within_range"},
              {"range", pre.roi.range}};
  if (pre.roi.rectangle) {
    const auto& r = *pre.roi.rectangle;
    roi["rectangle"] = {r.x_min, r.x_max, r.y_min, r.y_max};
  }
  const auto& sp = c.attack.sampling;
  const auto& so = c.scene;
  const json j = {
      {"seed", c.seed},
      {"detector",
       json::parse(SurrogateParamsToJson(c.detector))},
      {"scenes", c.scenes},
      {"budgets", c.budgets},
      {"modes", modes},
      {"include_control", c.include_control},
      {"robustness_scenes", c.robustness_scenes},
      {"frames", c.frames},
      {"frame_dt", c.frame_dt},
      {"jitter_sigma", c.jitter_sigma},
      {"resamples", c.resamples},
      {"grid", {{"size", pre.geometry.size}, {"range", pre.geometry.range}}},
      {"sensor_height", pre.sensor_pose.translation.z()},
      {"roi", roi},
      {"target",
       {{"distance", tw[0]},
        {"lateral", tw[1]},
        {"band_min", c.attack.target.band_min},
        {"band_max", c.attack.target.band_max},
        {"mask_sigma", c.attack.target.mask_sigma},
        {"corridor_half_width", c.attack.target.corridor_half_width}}},
      {"sampling",
       {{"l_tau", sp.l_tau},
        {"l_theta", sp.l_theta},
        {"n", sp.n},
        {"max_iterations", sp.max_iterations},
        {"learning_rate", sp.learning_rate},
        {"beta1", sp.beta1},
        {"beta2", sp.beta2},
        {"epsilon", sp.epsilon},
        {"gradient_step", sp.gradient_step}}},
      {"perception",
       {{"objectness_threshold", c.attack.perception.objectness_threshold},
        {"positiveness_threshold", c.attack.perception.positiveness_threshold},
        {"connectivity", static_cast<int>(c.attack.perception.connectivity)}}},
      {"spoof",
       {{"intensity", c.spoof.intensity},
        {"azimuth_window_deg", c.spoof.azimuth_window_deg}}},
      {"scene",
       {{"background", BackgroundName(so.background)},
        {"file", so.file.string()},
        {"parked_min", so.parked_min},
        {"parked_max", so.parked_max},
        {"parked_y_min", so.parked_y_min},
        {"parked_y_max", so.parked_y_max},
        {"lead_probability", so.lead_probability},
        {"lead_x_min", so.lead_x_min},
        {"lead_x_max", so.lead_x_max},
        {"lead_speed_mps", so.lead_speed_mps},
        {"clutter_min", so.clutter_min},
        {"clutter_max", so.clutter_max},
        {"clutter_x_min", so.clutter_x_min},
        {"clutter_x_max", so.clutter_x_max},
        {"clutter_y_abs_min", so.clutter_y_abs_min},
        {"clutter_y_abs_max", so.clutter_y_abs_max},
        {"range_noise_sigma", so.range_noise_sigma}}},
      {"decision",
       {{"corridor_half_width", c.decision.corridor_half_width},
        {"side_pass_min_distance", c.decision.side_pass_min_distance}}},
      {"scenario",
       {{"frame_count", c.scenario.frame_count},
        {"attack_start_frame", c.scenario.attack_start_frame},
        {"ego_speed_mps", c.scenario.ego_speed_mps},
        {"budget", c.scenario.budget},
        {"plan_attempts", c.scenario.plan_attempts},
        {"background", BackgroundName(c.scenario.background)}}},
  };
  return j.dump(2) + "\n";
}

SceneFrame MakeScene(const HarnessConfig& config, int index) {
  const auto i = static_cast<std::uint64_t>(index);
  if (config.scene.background == Background::kFile) {
    SceneFrame f;
    f.cloud = LoadPointCloud(config.scene.file);
    f.owner.assign(f.cloud.size(), -1);
    return f;
  }
  const World world =
      GenerateWorld(config.scene, MixSeed(config.seed, {kSceneTag, i}));
  return ScanWorld(world, config.attack.timing,
                   config.attack.preprocess.sensor_pose,
                   config.scene.range_noise_sigma,
                   MixSeed(config.seed, {kScanTag, i}));
}

SpoofTrace MakeTrace(const HarnessConfig& config, int index, int budget,
                     int variant) {
  return AlignTrace(SampleTraceLibrary(
      config.attack.timing, budget,
      MixSeed(config.seed, {kTraceTag, static_cast<std::uint64_t>(index)}),
      variant, config.spoof));
}

std::string SuccessTable::ToCsv() const {
  std::string out = "budget,mode,scenes,successes,rate\n";
  for (const auto& r : rows) {
    out += std::to_string(r.budget) + ',' + OptimizerModeName(r.mode) + ',' +
           std::to_string(r.scenes) + ',' + std::to_string(r.successes) + ',';
    AppendNumber(out, r.rate);
    out += '\n';
  }
  return out;
}

std::string SuccessTable::RecordsCsv() const {
  std::string out =
      "scene,budget,mode,success,best_loss,theta,tau_x,s_h,trace_points,"
      "capability_ok,span_deg\n";
  for (const auto& r : records) {
    out += std::to_string(r.scene) + ',' + std::to_string(r.budget) + ',' +
           OptimizerModeName(r.mode) + ',' + (r.success ? "1" : "0") + ',';
    AppendNumber(out, r.best_loss);
    out += ',';
    AppendNumber(out, r.params.theta);
    out += ',';
    AppendNumber(out, r.params.tau_x);
    out += ',';
    AppendNumber(out, r.params.s_h);
    out += ',' + std::to_string(r.trace_points) + ',' +
           (r.capability.ok() ? "1" : "0") + ',';
    AppendNumber(out, r.capability.span_deg);
    out += '\n';
  }
  return out;
}

double SuccessTable::Rate(int budget, OptimizerMode mode) const {
  for (const auto& r : rows) {
    if (r.budget == budget && r.mode == mode) return r.rate;
  }
  Fail(ErrorCode::kInvalidArgument, "no row for budget " +
                                        std::to_string(budget) + " mode " +
                                        OptimizerModeName(mode));
}

SuccessTable RunSuccessExperiment(const HarnessConfig& config,
                                  const Detector& detector) {
  config.Validate();
  const bool want_vanilla =
      std::ranges::find(config.modes, OptimizerMode::kVanilla) !=
      config.modes.end();
  const bool want_sampling =
      std::ranges::find(config.modes, OptimizerMode::kSampling) !=
      config.modes.end();

  SuccessTable table;
  std::vector<int> control_successes(config.modes.size(), 0);
  for (int s = 0; s < config.scenes; ++s) {
    const SceneFrame scene = MakeScene(config, s);
    const auto baseline = Perceive(scene.cloud, config.attack.preprocess,
                                   config.attack.perception, detector)
                              .obstacles;
    if (config.include_control &&
        IsSuccess(scene.cloud, baseline, config.attack, detector)) {
      for (auto& c : control_successes) ++c;
    }
    for (int budget : config.budgets) {
      const SpoofTrace trace = MakeTrace(config, s, budget);
      AttackConfig ac = config.attack;
      ac.mode = want_sampling ? OptimizerMode::kSampling
                              : OptimizerMode::kVanilla;
      AttackResult sampled =
          GenerateAdversarial(scene.cloud, trace, detector, ac, &baseline);

      auto record = [&](OptimizerMode mode, const AttackResult& r) {
        SceneAttackRecord rec;
        rec.scene = s;
        rec.budget = budget;
        rec.mode = mode;
        rec.success = r.success;
        rec.best_loss = r.best_loss;
        rec.params = r.best_params;
        rec.trace_points = r.adversarial_trace.points.size();
        rec.capability = CheckCapability(r.adversarial_trace, ac.timing);
        table.records.push_back(rec);
      };
      if (want_vanilla) {
        if (ac.mode == OptimizerMode::kVanilla) {
          record(OptimizerMode::kVanilla, sampled);
        } else {
          // The centered start of the sampling grid is exactly the vanilla
          // run: same objective, same initial point.
          AttackResult vanilla;
          const auto& center = sampled.starts[sampled.center_start];
          vanilla.best_params = center.best_params;
          vanilla.best_loss = center.best_loss;
          if (std::isfinite(center.best_loss)) {
            RealizeAttack(scene.cloud, trace, center.best_params, baseline,
                          ac, detector, vanilla);
          }
          record(OptimizerMode::kVanilla, vanilla);
        }
      }
      if (want_sampling) record(OptimizerMode::kSampling, sampled);
    }
  }

  for (int budget : config.budgets) {
    for (auto mode : config.modes) {
      SuccessRow row;
      row.budget = budget;
      row.mode = mode;
      for (const auto& r : table.records) {
        if (r.budget != budget || r.mode != mode) continue;
        ++row.scenes;
        row.successes += r.success ? 1 : 0;
      }
      row.rate = row.scenes ? static_cast<double>(row.successes) / row.scenes
                            : 0.0;
      table.rows.push_back(row);
    }
  }
  if (config.include_control) {
    for (std::size_t m = 0; m < config.modes.size(); ++m) {
      SuccessRow row;
      row.budget = 0;
      row.mode = config.modes[m];
      row.scenes = config.scenes;
      row.successes = control_successes[m];
      row.rate = static_cast<double>(row.successes) / row.scenes;
      table.rows.push_back(row);
    }
  }
  return table;
}

std::vector<AdversarialCase> CollectSuccessfulAttacks(
    const HarnessConfig& config, const Detector& detector, int budget) {
  config.Validate();
  if (!IsValidBudget(budget)) {
    Fail(ErrorCode::kValidation, "budget must be 20, 40 or 60");
  }
  std::vector<AdversarialCase> cases;
  AttackConfig ac = config.attack;
  ac.mode = OptimizerMode::kSampling;
  for (int s = 0; s < config.robustness_scenes; ++s) {
    AdversarialCase c;
    c.scene = s;
    c.budget = budget;
    c.frame = MakeScene(config, s);
    c.baseline = Perceive(c.frame.cloud, ac.preprocess, ac.perception, detector)
                     .obstacles;
    c.aligned_trace = MakeTrace(config, s, budget);
    const AttackResult r = GenerateAdversarial(c.frame.cloud, c.aligned_trace,
                                               detector, ac, &c.baseline);
    if (!r.success) continue;
    c.params = r.best_params;
    c.emitted = r.adversarial_trace;
    cases.push_back(std::move(c));
  }
  return cases;
}

std::vector<FrameRobustnessRow> RunFrameRobustness(
    const std::vector<AdversarialCase>& cases, const HarnessConfig& config,
    const Detector& detector, int budget) {
  std::vector<FrameRobustnessRow> rows;
  for (int k = 0; k < config.frames; ++k) {
    FrameRobustnessRow row;
    row.budget = budget;
    row.offset = k;
    for (const auto& c : cases) {
      const PointCloud frame = PerturbFrame(
          c.frame, k, config.frame_dt, config.jitter_sigma,
          MixSeed(config.seed, {kFrameTag, static_cast<std::uint64_t>(c.scene)}));
      // The obstacles the victim already tracks in this frame.
      const auto base = Perceive(frame, config.attack.preprocess,
                                 config.attack.perception, detector)
                            .obstacles;
      ++row.attacks;
      if (IsSuccess(Append(frame, c.emitted.points), base, config.attack,
                    detector)) {
        ++row.successes;
      }
    }
    row.rate = row.attacks ? static_cast<double>(row.successes) / row.attacks
                           : 0.0;
    rows.push_back(row);
  }
  return rows;
}

std::vector<TraceRobustnessRow> RunTraceRobustness(
    const std::vector<AdversarialCase>& cases, const HarnessConfig& config,
    const Detector& detector, int budget) {
  std::vector<TraceRobustnessRow> rows;
  for (int k = 1; k <= config.resamples; ++k) {
    TraceRobustnessRow row;
    row.budget = budget;
    row.resample = k;
    for (const auto& c : cases) {
      const SpoofTrace variant = MakeTrace(config, c.scene, budget, k);
      const SpoofTrace emitted = EmitTrace(variant, c.params,
                                           config.attack.preprocess,
                                           config.attack.timing);
      ++row.attacks;
      if (IsSuccess(Append(c.frame.cloud, emitted.points), c.baseline,
                    config.attack, detector)) {
        ++row.successes;
      }
    }
    row.rate = row.attacks ? static_cast<double>(row.successes) / row.attacks
                           : 0.0;
    rows.push_back(row);
  }
  return rows;
}

std::string FrameRobustnessCsv(const std::vector<FrameRobustnessRow>& rows) {
  std::string out = "budget,offset,attacks,successes,rate\n";
  for (const auto& r : rows) {
    out += std::to_string(r.budget) + ',' + std::to_string(r.offset) + ',' +
           std::to_string(r.attacks) + ',' + std::to_string(r.successes) + ',';
    AppendNumber(out, r.rate);
    out += '\n';
  }
  return out;
}

std::string TraceRobustnessCsv(const std::vector<TraceRobustnessRow>& rows) {
  std::string out = "budget,resample,attacks,successes,rate\n";
  for (const auto& r : rows) {
    out += std::to_string(r.budget) + ',' + std::to_string(r.resample) + ',' +
           std::to_string(r.attacks) + ',' + std::to_string(r.successes) + ',';
    AppendNumber(out, r.rate);
    out += '\n';
  }
  return out;
}

std::string ScenarioResult::ToCsv() const {
  std::string out = "frame,attacked,decision,nearest_front_m\n";
  for (const auto& r : timeline) {
    out += std::to_string(r.frame) + ',' + (r.attacked ? "1" : "0") + ',' +
           DecisionName(r.decision) + ',' +
           Distance(r.nearest_front_obstacle_distance) + '\n';
  }
  return out;
}

int ScenarioResult::StopFrames() const {
  return static_cast<int>(std::ranges::count_if(
      timeline, [](const auto& r) { return r.decision == Decision::kStop; }));
}

ScenarioResult RunScenario(ScenarioKind kind, const HarnessConfig& config,
                           const Detector& detector, bool apply_attack) {
  config.Validate();
  const ScenarioOptions& so = config.scenario;
  SceneOptions scene_opts = config.scene;
  scene_opts.background = so.background;
  World world =
      GenerateWorld(scene_opts, MixSeed(config.seed, {kSceneTag, 0xbeefULL}));
  const bool moving = kind == ScenarioKind::kEmergencyBrake;
  // Scene motion relative to the ego vehicle.
  for (auto& b : world.boxes) b.velocity_x -= moving ? so.ego_speed_mps : 0.0;
  if (!moving) {
    for (auto& b : world.boxes) b.velocity_x = 0.0;
  }

  SceneFrame base;
  if (so.background == Background::kFile) {
    base.cloud = LoadPointCloud(config.scene.file);
    base.owner.assign(base.cloud.size(), -1);
  } else {
    base = ScanWorld(world, config.attack.timing,
                     config.attack.preprocess.sensor_pose,
                     config.scene.range_noise_sigma,
                     MixSeed(config.seed, {kScanTag, 0xbeefULL}));
  }
  const int first_attacked = moving ? so.attack_start_frame : 0;

  ScenarioResult result;
  result.kind = kind;
  result.attack_applied = apply_attack;
  SpoofTrace emitted;
  if (apply_attack && first_attacked < so.frame_count) {
    // The attacker plans once against the frame where the attack starts and
    // then replays the same spoofed trace every frame.
    const PointCloud start =
        moving ? PerturbFrame(base, first_attacked, config.frame_dt, 0.0, 0)
               : base.cloud;
    const auto baseline = Perceive(start, config.attack.preprocess,
                                   config.attack.perception, detector)
                              .obstacles;
    AttackConfig ac = config.attack;
    ac.mode = OptimizerMode::kSampling;
    // Library traces are tried in order; the first that succeeds is kept,
    // otherwise the lowest-loss plan.
    double best_loss = std::numeric_limits<double>::infinity();
    for (int i = 0; i < so.plan_attempts; ++i) {
      const SpoofTrace trace = MakeTrace(config, i, so.budget);
      const AttackResult r =
          GenerateAdversarial(start, trace, detector, ac, &baseline);
      if (r.success || r.best_loss < best_loss) {
        best_loss = r.best_loss;
        emitted = r.adversarial_trace;
        result.plan_trace = i;
      }
      if (r.success) {
        result.attack_success = true;
        break;
      }
    }
  }

  for (int f = 0; f < so.frame_count; ++f) {
    TimelineRow row;
    row.frame = f;
    row.attacked = apply_attack && f >= first_attacked;
    PointCloud frame = PerturbFrame(
        base, moving ? f : 0, config.frame_dt, moving ? config.jitter_sigma : 0.0,
        MixSeed(config.seed, {kFrameTag, static_cast<std::uint64_t>(f)}));
    if (row.attacked) frame = Append(frame, emitted.points);
    const auto obstacles = Perceive(frame, config.attack.preprocess,
                                    config.attack.perception, detector)
                               .obstacles;
    const DecisionState d = Decide(obstacles, config.decision);
    row.decision = d.decision;
    row.nearest_front_obstacle_distance = d.nearest_front_obstacle_distance;
    result.timeline.push_back(row);
  }
  return result;
}

}  // namespace advlidar
