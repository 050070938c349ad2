/*
 * Copyright 2026 The slicevis Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Synthetic datasets for occupancy diagnostics.

#ifndef SLICEVIS_TOOLS_SIMULATE_H_
#define SLICEVIS_TOOLS_SIMULATE_H_

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "slicevis/frame.h"

namespace slicevis::tools {

enum class SimKind { kNormal, kUniform, kMixture };

SimKind ParseSimKind(std::string_view text);

struct SimOptions {
  SimKind kind = SimKind::kNormal;
  std::size_t n = 2000;
  std::size_t p = 15;
  std::uint64_t seed = 0;
  // Mixture only: equally sized spherical unit-variance components whose
  // centres have coordinates drawn from N(0, separation^2).
  std::size_t components = 5;
  double separation = 2.0;
};

// Numeric columns x1..xp.
DataFrame Simulate(const SimOptions& options);

}  // namespace slicevis::tools

#endif  // SLICEVIS_TOOLS_SIMULATE_H_
