// Copyright 2026 The gaittune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "gaittune/closed_loop.hpp"
#include "gaittune/gait_qp.hpp"

namespace gaittune::testing {

inline GaitPlan walking_plan(double beta, double gamma) {
  const GaitTask task = walking_task();
  return plan_gait(task, GaitWeights::uniform(1.0, beta, gamma), walking_start(task), walking_lipm());
}

}  // namespace gaittune::testing
