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

#include <span>
#include <string_view>
#include <vector>

namespace dul {

/// Concentration parameters of a Dirichlet over the (K-1)-simplex.
/// Invariants: K >= 2, every alpha_k >= kMinAlpha and finite, alpha0 = sum.
class DirichletParams {
 public:
  static constexpr double kMinAlpha = 1e-12;

  /// Throws InputError when an invariant is violated.
  explicit DirichletParams(std::vector<double> alpha);

  std::span<const double> alpha() const { return alpha_; }
  double alpha(std::size_t k) const { return alpha_[k]; }
  double alpha0() const { return alpha0_; }
  std::size_t size() const { return alpha_.size(); }

 private:
  std::vector<double> alpha_;
  double alpha0_;
};

/// Probability vector. Invariants: entries in [0, 1], sum within 1e-12 of 1.
class SimplexVector {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit SimplexVector(std::vector<double> p);

  std::span<const double> values() const { return p_; }
  double operator[](std::size_t k) const { return p_[k]; }
  std::size_t size() const { return p_.size(); }

 private:
  std::vector<double> p_;
};

/// How network outputs become concentrations.
///   relu_plus_one: alpha_k = max(0, f_k) + 1
///   exp_relu:      alpha_k = exp(max(0, f_k))
enum class AlphaMapping { relu_plus_one, exp_relu };

AlphaMapping parse_alpha_mapping(std::string_view name);
std::string_view to_string(AlphaMapping mapping);

DirichletParams alpha_from_logits(std::span<const double> logits,
                                  AlphaMapping mapping = AlphaMapping::relu_plus_one);

/// d alpha_k / d f_k for the given mapping (the Jacobian is diagonal). The
/// ReLU kink at f_k = 0 takes the zero branch.
std::vector<double> alpha_mapping_derivative(std::span<const double> logits, AlphaMapping mapping);

/// Differential entropy h = -int p(mu) ln p(mu) dmu, in nats:
///   sum_k lnG(a_k) - lnG(a_0) - sum_k (a_k - 1)(psi(a_k) - psi(a_0)).
double diff_entropy(const DirichletParams& d);

/// dh/dalpha_k = -(a_k - 1) psi_1(a_k) + (a_0 - K) psi_1(a_0).
std::vector<double> diff_entropy_grad(const DirichletParams& d);

/// Mean of the Dirichlet, alpha / alpha0.
SimplexVector expected_categorical(const DirichletParams& d);

/// Expected entropy of the categorical drawn from the Dirichlet (data uncertainty).
double expected_data_entropy(const DirichletParams& d);

/// Entropy of the expected categorical (overall uncertainty).
double total_uncertainty(const DirichletParams& d);

/// total_uncertainty - expected_data_entropy; nonnegative by Jensen.
double mutual_information(const DirichletParams& d);

/// -sum p ln p with 0 ln 0 = 0.
double categorical_entropy(const SimplexVector& p);

/// KL(p || q). Throws InputError on length mismatch and DomainError when q_k = 0
/// while p_k > 0.
double kl_categorical(const SimplexVector& p, const SimplexVector& q);

/// KL(Dir(a) || Dir(b)). Throws InputError when K differs.
double kl_dirichlet(const DirichletParams& a, const DirichletParams& b);

/// Gradient of kl_dirichlet with respect to its first argument.
std::vector<double> kl_dirichlet_grad_first(const DirichletParams& a, const DirichletParams& b);

/// Gradient of kl_dirichlet with respect to its second argument.
std::vector<double> kl_dirichlet_grad_second(const DirichletParams& a, const DirichletParams& b);

}  // namespace dul
