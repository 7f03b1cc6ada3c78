// Copyright 2026 The DUL Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dul/config.hpp"
#include "dul/mlp.hpp"

namespace dul {

struct VerifyOptions {
  std::uint64_t seed = 1;
  /// Fault injection: added to every digamma value the oracle checks consume.
  double digamma_offset = 0.0;
  int fuzz_cases = 10000;
  int mc_alphas = 50;
  int mc_samples = 1000000;
  /// Fuzzed small-network cases for the generalization bound.
  int bound_cases = 200;
};

/// One named check. For inequalities lhs <= rhs is the pass condition; for
/// identities lhs is the worst observed error and rhs the tolerance.
struct CheckResult {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool passed = false;
  int cases = 0;
  std::string detail;  // offending inputs when failed
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  int violations() const;
  bool ok() const { return violations() == 0; }
};

/// Runs the special-function, Dirichlet and inequality suites. The bound is
/// also evaluated for every model in `trained` on the config's datasets.
VerifyReport verify(const TrainConfig& cfg, const VerifyOptions& opt, const std::vector<Mlp>& trained = {});

void write_verify_text(const VerifyReport& r, std::ostream& out);
inline constexpr std::string_view kVerifyCsvHeader = "check,cases,lhs,rhs,passed";
void write_verify_csv(const VerifyReport& r, std::ostream& out);

/// Monte-Carlo estimate of -E[ln p(mu)] under Dir(alpha), with its standard error.
struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};
McEstimate mc_diff_entropy(const std::vector<double>& alpha, int samples, std::uint64_t seed);

}  // namespace dul
