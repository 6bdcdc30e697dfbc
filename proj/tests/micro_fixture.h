/* Copyright 2026 The CGNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Shared fixtures for model and training tests.

#ifndef CGNET_TESTS_MICRO_FIXTURE_H_
#define CGNET_TESTS_MICRO_FIXTURE_H_

#include <vector>

#include "cgnet/model.h"
#include "cgnet/scene.h"
#include "cgnet/training.h"

namespace cgnet::testing {

// 128x128 input, four stride-2 stages -> 8x8 feature map, tiny widths.
ModelConfig MicroConfig();

// A generated scene plus four hand-picked ROIs: a target grasp hull, a
// non-target grasp hull and two table regions far from every grasp.
struct MicroProblem {
  Scene scene;
  std::vector<GtGrasp> gts;
  std::vector<Box> rois;
  std::vector<int> tokens;
};
MicroProblem MakeMicroProblem();

// Relative error ||a - n|| / (||a|| + ||n||) per parameter tensor between the
// analytic gradient and central differences at step `eps`.
struct GradCheckRow {
  std::string name;
  double rel_error = 0.0;
  double analytic_norm = 0.0;
  int checked = 0;
};
std::vector<GradCheckRow> GradientCheck(const CgnetModel<double>& model,
                                        const TrainConfig& config,
                                        const StepInput& input, double eps,
                                        int max_entries_per_tensor);

}  // namespace cgnet::testing

#endif  // CGNET_TESTS_MICRO_FIXTURE_H_
