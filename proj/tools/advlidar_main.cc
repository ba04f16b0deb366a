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

// Command-line front end; everything goes through the C API.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "advlidar/c_api.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitValidation = 2;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<int> budget;
  std::optional<std::string> mode;
  std::string detector;
};

int Report(advl_status st) {
  if (st == ADVL_OK) return 0;
  std::cerr << "error (" << advl_status_name(st) << "): " << advl_last_error()
            << "\n";
  return advl_status_is_validation(st) ? kExitValidation : kExitFailure;
}

void AddCommon(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "harness config (JSON)");
  cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--budget", f.budget, "spoof budget")
      ->check(CLI::IsMember({20, 40, 60}));
  cmd->add_option("--mode", f.mode, "optimizer mode")
      ->check(CLI::IsMember({"vanilla", "sampling"}));
  cmd->add_option("--detector", f.detector, "surrogate detector config");
}

// Builds the session and applies flag overrides; returns a status.
advl_status OpenSession(const CommonFlags& f, advl_session** s) {
  advl_status st = f.config.empty()
                       ? advl_session_create(nullptr, s)
                       : advl_session_create_from_file(f.config.c_str(), s);
  if (st != ADVL_OK) return st;
  if (!f.detector.empty()) {
    st = advl_session_load_detector(*s, f.detector.c_str());
    if (st != ADVL_OK) return st;
  }
  if (f.seed) {
    st = advl_session_set_seed(*s, *f.seed);
    if (st != ADVL_OK) return st;
  }
  if (f.budget) {
    st = advl_session_set_budget(*s, *f.budget);
    if (st != ADVL_OK) return st;
  }
  if (f.mode) st = advl_session_set_mode(*s, f.mode->c_str());
  return st;
}

int PrintAndFree(advl_status st, char* text) {
  if (st == ADVL_OK && text != nullptr) std::fputs(text, stdout);
  advl_string_free(text);
  return Report(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial LiDAR spoofing workbench"};
  app.require_subcommand(1);

  CommonFlags f;
  std::string input;
  std::string trace;
  std::string scenario_name;
  bool no_attack = false;
  int scenes = 0;
  int variant = 0;

  auto* perceive = app.add_subcommand("perceive", "run the perception pipeline");
  AddCommon(perceive, f);
  perceive->add_option("--input", input, "point cloud (.csv or binary)");

  auto* synth = app.add_subcommand("spoof-synth", "write a library spoof trace");
  AddCommon(synth, f);
  synth->add_option("--variant", variant, "device-noise variant (0 = nominal)")
      ->check(CLI::NonNegativeNumber);

  auto* attack = app.add_subcommand("attack", "generate an adversarial trace");
  AddCommon(attack, f);
  attack->add_option("--input", input, "scene point cloud; default scene 0");
  attack->add_option("--trace", trace, "spoof trace; default library trace");

  auto* exp_success = app.add_subcommand("exp-success", "success-rate table");
  AddCommon(exp_success, f);
  exp_success->add_option("--scenes", scenes, "number of scenes")
      ->check(CLI::PositiveNumber);

  auto* exp_frame =
      app.add_subcommand("exp-frame-robust", "success across later frames");
  AddCommon(exp_frame, f);

  auto* exp_trace =
      app.add_subcommand("exp-trace-robust", "success across resampled traces");
  AddCommon(exp_trace, f);

  auto* scenario = app.add_subcommand("scenario", "decision timeline");
  AddCommon(scenario, f);
  scenario->add_option("name", scenario_name, "emergency_brake or av_freezing")
      ->required()
      ->check(CLI::IsMember({"emergency_brake", "av_freezing"}));
  scenario->add_flag("--no-attack", no_attack, "run the unattacked control");

  auto* selftest = app.add_subcommand("selftest", "quick internal checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  if (selftest->parsed()) {
    char* report = nullptr;
    const advl_status st = advl_selftest(&report);
    if (report != nullptr) std::fputs(report, stdout);
    advl_string_free(report);
    return Report(st);
  }

  advl_session* s = nullptr;
  advl_status st = OpenSession(f, &s);
  if (st == ADVL_OK && scenes > 0) st = advl_session_set_scenes(s, scenes);
  if (st != ADVL_OK) {
    advl_session_destroy(s);
    return Report(st);
  }

  int code = 0;
  char* text = nullptr;
  if (perceive->parsed()) {
    advl_cloud* cloud = nullptr;
    st = input.empty() ? advl_scene_generate(s, 0, &cloud)
                       : advl_cloud_load(input.c_str(), &cloud);
    int decision = 0;
    if (st == ADVL_OK) st = advl_perceive(s, cloud, &text, &decision);
    if (st == ADVL_OK) {
      std::fputs(text, stdout);
      std::printf("decision: %s\n", decision ? "STOP" : "PROCEED");
    }
    advl_string_free(text);
    advl_cloud_destroy(cloud);
    code = Report(st);
  } else if (synth->parsed()) {
    const std::string path = f.out + "/trace.csv";
    st = advl_spoof_synth(s, f.budget.value_or(60), f.seed.value_or(1), variant,
                          path.c_str());
    if (st == ADVL_OK) std::printf("wrote %s\n", path.c_str());
    code = Report(st);
  } else if (attack->parsed()) {
    advl_cloud* cloud = nullptr;
    if (!input.empty()) st = advl_cloud_load(input.c_str(), &cloud);
    int success = 0;
    if (st == ADVL_OK) {
      st = advl_attack(s, cloud, trace.empty() ? nullptr : trace.c_str(),
                       f.out.c_str(), &success);
    }
    if (st == ADVL_OK) std::printf("success: %d\n", success);
    advl_cloud_destroy(cloud);
    code = Report(st);
  } else if (exp_success->parsed()) {
    st = advl_exp_success(s, f.out.c_str(), &text);
    code = PrintAndFree(st, text);
  } else if (exp_frame->parsed()) {
    st = advl_exp_frame_robust(s, f.out.c_str(), &text);
    code = PrintAndFree(st, text);
  } else if (exp_trace->parsed()) {
    st = advl_exp_trace_robust(s, f.out.c_str(), &text);
    code = PrintAndFree(st, text);
  } else if (scenario->parsed()) {
    st = advl_scenario(s, scenario_name.c_str(), no_attack ? 0 : 1,
                       f.out.c_str(), &text);
    code = PrintAndFree(st, text);
  }
  advl_session_destroy(s);
  return code;
}
