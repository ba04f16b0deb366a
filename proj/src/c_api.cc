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

#include "advlidar/c_api.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>

#include "advlidar/advgen.h"
#include "advlidar/harness.h"
#include "advlidar/status.h"

struct advl_session {
  advlidar::HarnessConfig config;
  std::unique_ptr<advlidar::SurrogateDetector> detector;

  void Rebuild() {
    config.Validate();
    detector = std::make_unique<advlidar::SurrogateDetector>(config.detector);
  }
};

struct advl_cloud {
  advlidar::PointCloud cloud;
};

namespace {

thread_local std::string g_last_error;

advl_status ToStatus(advlidar::ErrorCode code) {
  using advlidar::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument: return ADVL_INVALID_ARGUMENT;
    case ErrorCode::kParse: return ADVL_PARSE;
    case ErrorCode::kValidation: return ADVL_VALIDATION;
    case ErrorCode::kCapability: return ADVL_CAPABILITY;
    case ErrorCode::kPrecondition: return ADVL_PRECONDITION;
    case ErrorCode::kRange: return ADVL_RANGE;
    case ErrorCode::kIo: return ADVL_IO;
    case ErrorCode::kNumerical: return ADVL_NUMERICAL;
  }
  return ADVL_INTERNAL;
}

advl_status Guard(const std::function<void()>& body) {
  try {
    body();
    g_last_error.clear();
    return ADVL_OK;
  } catch (const advlidar::Error& e) {
    g_last_error = e.what();
    return ToStatus(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return ADVL_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ADVL_INTERNAL;
  }
}

void Require(bool ok, const char* what) {
  if (!ok) advlidar::Fail(advlidar::ErrorCode::kInvalidArgument, what);
}

char* Duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

std::filesystem::path OutDir(const char* out_dir) {
  Require(out_dir != nullptr, "out_dir is null");
  std::filesystem::path p(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) {
    advlidar::Fail(advlidar::ErrorCode::kIo,
                   "cannot create " + p.string() + ": " + ec.message());
  }
  return p;
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) advlidar::Fail(advlidar::ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) advlidar::Fail(advlidar::ErrorCode::kIo, "cannot write " + path.string());
}

std::string RunSelftest(bool& all_ok) {
  using namespace advlidar;
  std::string report;
  all_ok = true;
  auto check = [&](const char* name, const std::function<bool()>& fn) {
    bool ok = false;
    std::string why;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      why = e.what();
    }
    all_ok = all_ok && ok;
    report += std::string(ok ? "PASS " : "FAIL ") + name;
    if (!why.empty()) report += " (" + why + ")";
    report += '\n';
  };

  check("merge_identity", [] {
    FeatureGrid x = ExtractFeatures(
        PointCloud({{5.0, 0.0, 1.2, 0.4}, {-3.0, 2.0, 0.5, 0.9}}), {});
    return Merge(x, FeatureGrid{}) == x;
  });
  check("bilinear_midpoint", [] {
    const double patch[] = {0.0, 0.0, 0.0, 4.0};
    return BilinearSample(patch, 2, 0.5, 0.5) == 1.0;
  });
  check("vlp16_column", [] {
    const auto timing = LidarTimingModel::Vlp16();
    std::vector<ScheduledPulse> wave;
    for (int k = 0; k < 16; ++k) wave.push_back({k, RangeToDelay(5.0)});
    const SpoofTrace t = SynthesizeTrace(timing, wave, 0.0);
    return t.points.size() == 16 && CheckCapability(t, timing).ok();
  });
  check("vehicle_detected", [] {
    std::vector<Point> pts;
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 10; ++j) {
        for (int k = 0; k < 3; ++k) {
          pts.push_back({5.0 + 0.2 * i, -1.0 + 0.2 * j, 0.5 * k, 0.5});
        }
      }
    }
    PreprocessConfig pre;
    pre.sensor_pose = Pose::Identity();
    const auto out = Perceive(PointCloud(std::move(pts)), pre, {},
                              SurrogateDetector{});
    return out.obstacles.size() == 1;
  });
  check("empty_road_proceeds", [] {
    HarnessConfig c;
    c.scene.background = Background::kEmptyRoad;
    const SceneFrame f = MakeScene(c, 0);
    const auto out = Perceive(f.cloud, c.attack.preprocess,
                              c.attack.perception, SurrogateDetector{});
    return Decide(out.obstacles, c.decision).decision == Decision::kProceed;
  });
  return report;
}

}  // namespace

extern "C" {

const char* advl_version(void) { return "1.0.0"; }

const char* advl_status_name(advl_status status) {
  switch (status) {
    case ADVL_OK: return "ok";
    case ADVL_INVALID_ARGUMENT: return "invalid_argument";
    case ADVL_PARSE: return "parse";
    case ADVL_VALIDATION: return "validation";
    case ADVL_CAPABILITY: return "capability";
    case ADVL_PRECONDITION: return "precondition";
    case ADVL_RANGE: return "range";
    case ADVL_IO: return "io";
    case ADVL_NUMERICAL: return "numerical";
    case ADVL_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* advl_last_error(void) { return g_last_error.c_str(); }

int advl_status_is_validation(advl_status status) {
  switch (status) {
    case ADVL_INVALID_ARGUMENT:
    case ADVL_PARSE:
    case ADVL_VALIDATION:
    case ADVL_CAPABILITY:
    case ADVL_PRECONDITION:
    case ADVL_RANGE:
      return 1;
    default:
      return 0;
  }
}

void advl_string_free(char* s) { std::free(s); }

advl_status advl_session_create(const char* config_json, advl_session** out) {
  return Guard([&] {
    Require(out != nullptr, "out is null");
    auto s = std::make_unique<advl_session>();
    if (config_json != nullptr) {
      s->config = advlidar::ParseHarnessConfig(config_json);
    }
    s->Rebuild();
    *out = s.release();
  });
}

advl_status advl_session_create_from_file(const char* path,
                                          advl_session** out) {
  return Guard([&] {
    Require(out != nullptr && path != nullptr, "null argument");
    auto s = std::make_unique<advl_session>();
    s->config = advlidar::LoadHarnessConfig(path);
    s->Rebuild();
    *out = s.release();
  });
}

void advl_session_destroy(advl_session* session) { delete session; }

advl_status advl_session_set_seed(advl_session* session, uint64_t seed) {
  return Guard([&] {
    Require(session != nullptr, "session is null");
    session->config.seed = seed;
  });
}

advl_status advl_session_set_budget(advl_session* session, int budget) {
  return Guard([&] {
    Require(session != nullptr, "session is null");
    if (!advlidar::IsValidBudget(budget)) {
      advlidar::Fail(advlidar::ErrorCode::kValidation,
                     "budget must be 20, 40 or 60, got " + std::to_string(budget));
    }
    session->config.budgets = {budget};
    session->config.scenario.budget = budget;
  });
}

advl_status advl_session_set_mode(advl_session* session, const char* mode) {
  return Guard([&] {
    Require(session != nullptr && mode != nullptr, "null argument");
    const auto m = advlidar::ParseOptimizerMode(mode);
    session->config.modes = {m};
    session->config.attack.mode = m;
  });
}

advl_status advl_session_set_scenes(advl_session* session, int scenes) {
  return Guard([&] {
    Require(session != nullptr, "session is null");
    if (scenes < 1) {
      advlidar::Fail(advlidar::ErrorCode::kValidation, "scenes must be >= 1");
    }
    session->config.scenes = scenes;
  });
}

advl_status advl_session_load_detector(advl_session* session,
                                       const char* path) {
  return Guard([&] {
    Require(session != nullptr && path != nullptr, "null argument");
    session->config.detector = advlidar::LoadSurrogateParams(path);
    session->Rebuild();
  });
}

advl_status advl_session_config_json(const advl_session* session, char** out) {
  return Guard([&] {
    Require(session != nullptr && out != nullptr, "null argument");
    *out = Duplicate(advlidar::HarnessConfigToJson(session->config));
  });
}

advl_status advl_cloud_load(const char* path, advl_cloud** out) {
  return Guard([&] {
    Require(path != nullptr && out != nullptr, "null argument");
    auto c = std::make_unique<advl_cloud>();
    c->cloud = advlidar::LoadPointCloud(path);
    *out = c.release();
  });
}

advl_status advl_cloud_from_array(const double* xyzi, size_t n,
                                  advl_cloud** out) {
  return Guard([&] {
    Require(out != nullptr && (xyzi != nullptr || n == 0), "null argument");
    std::vector<advlidar::Point> pts;
    pts.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      pts.push_back({xyzi[4 * i], xyzi[4 * i + 1], xyzi[4 * i + 2],
                     xyzi[4 * i + 3]});
    }
    auto c = std::make_unique<advl_cloud>();
    c->cloud = advlidar::PointCloud(std::move(pts));
    *out = c.release();
  });
}

size_t advl_cloud_size(const advl_cloud* cloud) {
  return cloud == nullptr ? 0 : cloud->cloud.size();
}

advl_status advl_cloud_copy_points(const advl_cloud* cloud, double* xyzi,
                                   size_t capacity) {
  return Guard([&] {
    Require(cloud != nullptr && (xyzi != nullptr || cloud->cloud.empty()),
            "null argument");
    Require(capacity >= cloud->cloud.size(), "capacity too small");
    for (size_t i = 0; i < cloud->cloud.size(); ++i) {
      const auto& p = cloud->cloud[i];
      xyzi[4 * i] = p.x;
      xyzi[4 * i + 1] = p.y;
      xyzi[4 * i + 2] = p.z;
      xyzi[4 * i + 3] = p.intensity;
    }
  });
}

advl_status advl_cloud_save(const advl_cloud* cloud, const char* path) {
  return Guard([&] {
    Require(cloud != nullptr && path != nullptr, "null argument");
    advlidar::SavePointCloud(cloud->cloud, path);
  });
}

void advl_cloud_destroy(advl_cloud* cloud) { delete cloud; }

advl_status advl_scene_generate(const advl_session* session, int index,
                                advl_cloud** out) {
  return Guard([&] {
    Require(session != nullptr && out != nullptr, "null argument");
    Require(index >= 0, "scene index must be >= 0");
    auto c = std::make_unique<advl_cloud>();
    c->cloud = advlidar::MakeScene(session->config, index).cloud;
    *out = c.release();
  });
}

advl_status advl_perceive(const advl_session* session, const advl_cloud* cloud,
                          char** obstacles_jsonl, int* decision) {
  return Guard([&] {
    Require(session != nullptr && cloud != nullptr, "null argument");
    const auto& cfg = session->config;
    const auto out = advlidar::Perceive(cloud->cloud, cfg.attack.preprocess,
                                        cfg.attack.perception,
                                        *session->detector);
    if (obstacles_jsonl != nullptr) {
      *obstacles_jsonl = Duplicate(advlidar::ObstaclesToJsonLines(out.obstacles));
    }
    if (decision != nullptr) {
      *decision = advlidar::Decide(out.obstacles, cfg.decision).decision ==
                          advlidar::Decision::kStop
                      ? 1
                      : 0;
    }
  });
}

advl_status advl_spoof_synth(const advl_session* session, int budget,
                             uint64_t seed, int variant, const char* out_path) {
  return Guard([&] {
    Require(session != nullptr && out_path != nullptr, "null argument");
    Require(variant >= 0, "variant must be >= 0");
    const auto trace = advlidar::SampleTraceLibrary(
        session->config.attack.timing, budget, seed, variant,
        session->config.spoof);
    const std::filesystem::path path(out_path);
    if (path.has_parent_path()) OutDir(path.parent_path().c_str());
    advlidar::SaveTrace(trace, path);
  });
}

advl_status advl_attack(const advl_session* session, const advl_cloud* scene,
                        const char* trace_path, const char* out_dir,
                        int* success) {
  return Guard([&] {
    Require(session != nullptr, "session is null");
    const auto dir = OutDir(out_dir);
    const auto& cfg = session->config;
    const advlidar::PointCloud x =
        scene != nullptr ? scene->cloud : advlidar::MakeScene(cfg, 0).cloud;
    advlidar::SpoofTrace trace;
    if (trace_path != nullptr) {
      trace = advlidar::LoadTrace(trace_path);
      if (!trace.aligned) trace = advlidar::AlignTrace(trace);
    } else {
      trace = advlidar::MakeTrace(cfg, 0, cfg.budgets.front());
    }
    advlidar::AttackConfig ac = cfg.attack;
    ac.mode = cfg.modes.size() == 1 ? cfg.modes.front()
                                    : advlidar::OptimizerMode::kSampling;
    const auto r =
        advlidar::GenerateAdversarial(x, trace, *session->detector, ac);
    WriteText(dir / "attack.json", advlidar::AttackResultJson(r));
    WriteText(dir / "trajectory.csv", advlidar::TrajectoryCsv(r));
    if (r.best_start >= 0) {
      advlidar::SaveTrace(r.adversarial_trace, dir / "adversarial_trace.csv");
      advlidar::SavePointCloud(r.adversarial_cloud,
                               dir / "adversarial_cloud.bin");
    }
    if (success != nullptr) *success = r.success ? 1 : 0;
  });
}

advl_status advl_exp_success(const advl_session* session, const char* out_dir,
                             char** csv) {
  return Guard([&] {
    Require(session != nullptr, "session is null");
    const auto dir = OutDir(out_dir);
    const auto table =
        advlidar::RunSuccessExperiment(session->config, *session->detector);
    const std::string main = table.ToCsv();
    WriteText(dir / "success.csv", main);
    WriteText(dir / "success_records.csv", table.RecordsCsv());
    if (csv != nullptr) *csv = Duplicate(main);
  });
}

advl_status advl_exp_frame_robust(const advl_session* session,
                                  const char* out_dir, char** csv) {
  return Guard([&] {
    Require(session != nullptr, "session is null");
    const auto dir = OutDir(out_dir);
    std::vector<advlidar::FrameRobustnessRow> rows;
    for (int b : session->config.budgets) {
      const auto cases = advlidar::CollectSuccessfulAttacks(
          session->config, *session->detector, b);
      const auto part = advlidar::RunFrameRobustness(
          cases, session->config, *session->detector, b);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    const std::string main = advlidar::FrameRobustnessCsv(rows);
    WriteText(dir / "frame_robustness.csv", main);
    if (csv != nullptr) *csv = Duplicate(main);
  });
}

advl_status advl_exp_trace_robust(const advl_session* session,
                                  const char* out_dir, char** csv) {
  return Guard([&] {
    Require(session != nullptr, "session is null");
    const auto dir = OutDir(out_dir);
    std::vector<advlidar::TraceRobustnessRow> rows;
    for (int b : session->config.budgets) {
      const auto cases = advlidar::CollectSuccessfulAttacks(
          session->config, *session->detector, b);
      const auto part = advlidar::RunTraceRobustness(
          cases, session->config, *session->detector, b);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    const std::string main = advlidar::TraceRobustnessCsv(rows);
    WriteText(dir / "trace_robustness.csv", main);
    if (csv != nullptr) *csv = Duplicate(main);
  });
}

advl_status advl_scenario(const advl_session* session, const char* name,
                          int apply_attack, const char* out_dir, char** csv) {
  return Guard([&] {
    Require(session != nullptr && name != nullptr, "null argument");
    const auto kind = advlidar::ParseScenario(name);
    const auto dir = OutDir(out_dir);
    const auto r = advlidar::RunScenario(kind, session->config,
                                         *session->detector, apply_attack != 0);
    const std::string main = r.ToCsv();
    WriteText(dir / (std::string(name) + "_timeline.csv"), main);
    if (csv != nullptr) *csv = Duplicate(main);
  });
}

advl_status advl_selftest(char** report) {
  bool ok = false;
  const advl_status st = Guard([&] {
    const std::string text = RunSelftest(ok);
    if (report != nullptr) *report = Duplicate(text);
  });
  if (st != ADVL_OK) return st;
  if (!ok) {
    g_last_error = "selftest failed";
    return ADVL_INTERNAL;
  }
  return ADVL_OK;
}

}  // extern "C"
