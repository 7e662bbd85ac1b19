// s2f/gradcheck.h

// Copyright 2026  The s2f Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Central finite-difference checks of every differentiable op, in double.
//
// Each case reduces the op output to a scalar through a fixed random
// projection and compares the tape gradient of every checked input with
// (f(x + h) - f(x - h)) / 2h. The per-element error is
//   |analytic - numeric| / max(|numeric|, 1e-3 * max_j |numeric_j|),
// so elements whose true gradient is near zero are judged against the
// scale of the whole gradient. Inputs are drawn away from kinks (ReLU at 0,
// max-pool ties, L1 at equality) by more than h.

#ifndef S2F_GRADCHECK_H_
#define S2F_GRADCHECK_H_

#include <functional>
#include <string>
#include <vector>

#include "s2f/tape.h"

namespace s2f {

struct GradcheckCase {
  std::string name;
  std::vector<Tensor<double>> inputs;
  std::vector<bool> checked;  // per input; unchecked inputs enter as constants
  /// Builds the op on `tape` and returns a tensor-valued output.
  std::function<Var(Tape<double> &, const std::vector<Var> &)> build;
};

struct GradcheckResult {
  std::string name;
  double max_rel_error = 0;
  std::size_t elements = 0;
  bool passed = false;
};

GradcheckResult RunGradcheck(const GradcheckCase &c, double step = 1e-5,
                             double tolerance = 1e-5);

/// The built-in suite: every op plus the composite loss.
std::vector<GradcheckCase> GradcheckSuite(uint64_t seed = 1);

/// One "name max_rel_error elements PASS|FAIL" line per result.
std::string GradcheckReport(const std::vector<GradcheckResult> &results);

}  // namespace s2f

#endif  // S2F_GRADCHECK_H_
