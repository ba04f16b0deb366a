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

#include <cmath>
#include <numbers>

namespace advlidar {

/// The attack's optimization variables: rotation about the sensor z-axis,
/// translation along x, and a height scale. Lateral translation is always
/// zero because traces are aligned to the x-axis first.
struct TransformParams {
  double theta = 0.0;  // radians
  double tau_x = 0.0;  // meters
  double s_h = 1.0;

  /// Throws kValidation unless all finite and s_h > 0.
  void Validate() const;

  friend bool operator==(const TransformParams&,
                         const TransformParams&) = default;
};

/// Maps an angle into (-pi, pi].
inline double WrapAngle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  a = std::remainder(a, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  return a;
}

inline double DegToRad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double RadToDeg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace advlidar
