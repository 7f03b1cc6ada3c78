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
#include <vector>

#include "dul/dirichlet.hpp"
#include "dul/mlp.hpp"
#include "dul/synthdata.hpp"

namespace dul {

/// Finite stand-in for a hypothesis space: the sup and argmin over the space
/// become max and min over members. Invariants: >= 2 members, identical
/// input/output widths.
class HypothesisPool {
 public:
  explicit HypothesisPool(std::vector<Mlp> members);

  /// `bases` plus `n_perturbed` Gaussian copies of bases[0] with per-parameter
  /// sigma = rel_sigma * RMS(bases[0] parameters).
  static HypothesisPool with_perturbations(std::vector<Mlp> bases, int n_perturbed, double rel_sigma,
                                           std::uint64_t seed);

  const std::vector<Mlp>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }

 private:
  std::vector<Mlp> members_;
};

/// 1/2 sum |p_k - q_k|. Throws InputError on length mismatch.
double tvd(const SimplexVector& p, const SimplexVector& q);

/// Mean over rows of TV(softmax f(x), softmax f2(x)). Throws InputError when
/// `samples` is empty.
double disparity(const Matrix& samples, const Mlp& f, const Mlp& f2);

/// max over ordered member pairs of disparity(P) - disparity(Q). The diagonal
/// pairs contribute 0, so the result is >= 0.
double disparity_discrepancy(const Matrix& p_samples, const Matrix& q_samples, const HypothesisPool& pool);

struct InequalityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// lhs = mean TV(softmax, U); rhs = mean sqrt(max(0, oe_sample - ln K) / 2).
/// holds = lhs <= rhs + 1e-9.
InequalityReport lemma2_check(const Matrix& ood_logits);

struct DivergenceReport {
  double tv = 0.0;
  double kl = 0.0;
  bool holds = false;
};

/// holds = 2 tv^2 <= KL(p || q) + 1e-12.
DivergenceReport pinsker_check(const SimplexVector& p, const SimplexVector& q);

/// holds = tv <= sqrt(1 - exp(-KL(p || q))) + 1e-12.
DivergenceReport bretagnolle_huber_check(const SimplexVector& p, const SimplexVector& q);

struct BoundReport {
  double gerror = 0.0;        // mean CE on the covariate-shifted set
  double lower_bound = 0.0;
  double d_ff = 0.0;          // disparity discrepancy (COV, SEM) over the pool
  double lambda_const = 0.0;  // min over pool of mean_cov TV(F, U) + mean_sem TV(F, U)
  double c_const = 0.0;       // 2 mean TV(p, U) - 2 lambda - 1 + mean H(p)
  double c_without_lambda = 0.0;  // same grouping with -2 lambda moved into the bound
  double detection_term = 0.0;    // mean_sem sqrt(2 max(0, oe - ln K))
  bool holds = false;             // gerror >= lower_bound - 1e-9
};

/// Generalization lower bound for an MSP detector. Ground truth p(y|x) is the
/// one-hot label. `model` is always added to the pool so the bound's chain of
/// inequalities holds exactly for the finite pool. Throws InputError on an
/// unlabeled cov set.
BoundReport theorem1_bound(const LabeledDataset& cov, const LabeledDataset& sem, const Mlp& model,
                           const HypothesisPool& pool);

}  // namespace dul
