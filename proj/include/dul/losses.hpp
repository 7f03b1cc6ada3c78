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

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dul/dirichlet.hpp"
#include "dul/mlp.hpp"

namespace dul {

// ---------------------------------------------------------------------------
// Logit-level losses. Every loss is a batch mean and returns dL/dlogits with
// the same shape as the logits it was given.
// ---------------------------------------------------------------------------

struct LogitLoss {
  double value = 0.0;
  Matrix grad;
};

struct PairLoss {
  double value = 0.0;
  Matrix id_grad;
  Matrix ood_grad;
};

std::vector<double> softmax(std::span<const double> logits);
double log_sum_exp(std::span<const double> logits);

/// Mean -ln p_y. With dirichlet_mode, p is the Dirichlet mean under `mapping`
/// instead of the softmax. Throws InputError on a label outside [0, K).
LogitLoss ce_loss(const Matrix& logits, std::span<const int> labels, bool dirichlet_mode = false,
                  AlphaMapping mapping = AlphaMapping::relu_plus_one);

/// Outlier exposure: mean of -(1/K) sum_k ln softmax_k. Always >= ln K.
LogitLoss oe_loss(const Matrix& ood_logits);

/// Per-sample outlier-exposure value for one row of logits.
double oe_sample_loss(std::span<const double> logits);

/// E(x) = -log sum_k exp(f_k), evaluated with a max shift.
double energy_score(std::span<const double> logits);

/// mean_id[max(0, E - m_in)^2] + mean_ood[max(0, m_out - E)^2].
/// Throws InputError when either batch is empty.
PairLoss energy_margin_loss(const Matrix& id_logits, const Matrix& ood_logits, double m_in, double m_out);

/// Per-class weights exp(f_k) / sum_j exp(f_j) multiplying grad f_k in the
/// gradient of the energy hinge; the softmax of the logits.
SimplexVector energy_grad_weights(std::span<const double> logits);

/// Prior-network objective: mean KL(Dir(target(y)) || Dir(pred)) over ID plus
/// mean KL(Dir(pred) || Dir(1,...,1)) over outliers. target(y) is
/// target_alpha0 * ((1 - smoothing) onehot(y) + smoothing / K).
PairLoss dpn_loss(const Matrix& id_logits, std::span<const int> id_labels, const Matrix& ood_logits,
                  double target_alpha0, double smoothing,
                  AlphaMapping mapping = AlphaMapping::relu_plus_one);

/// Distributional-uncertainty measure used by the detection hinge.
///   diff_entropy: h = differential entropy of Dir(alpha)
///   neg_strength: h = -alpha0
enum class DuMeasure { diff_entropy, neg_strength };

DuMeasure parse_du_measure(std::string_view name);
std::string_view to_string(DuMeasure m);

/// DU value and its gradient with respect to alpha.
double du_value(const DirichletParams& d, DuMeasure measure);
std::vector<double> du_grad(const DirichletParams& d, DuMeasure measure);

struct DulParams {
  double lambda = 0.3;
  double gamma = 2.0;
  double m_out = 30.0;
  int tau = 1;
  AlphaMapping mapping = AlphaMapping::relu_plus_one;
  DuMeasure du_measure = DuMeasure::diff_entropy;
  /// When set, replaces the per-sample h0 of the frozen reference.
  std::optional<double> h0_constant;
};

struct DulLoss {
  double value = 0.0;
  double ce_term = 0.0;
  double detection_term = 0.0;  // mean hinge^tau, before lambda
  double kl_term = 0.0;         // mean KL(p || p0), before gamma
  Matrix id_grad;
  Matrix ood_grad;
};

/// ce(id, dirichlet mode) + lambda mean[max(0, h0 + m_out - h)^tau]
///   + gamma mean[KL(p || p0)].
/// h0 and p0 come from frozen_ood_logits and receive no gradient.
/// Throws InputError when ood and frozen shapes differ.
DulLoss dul_loss(const Matrix& id_logits, std::span<const int> id_labels, const Matrix& ood_logits,
                 const Matrix& frozen_ood_logits, const DulParams& params);

// ---------------------------------------------------------------------------
// Parameter-level objectives.
// ---------------------------------------------------------------------------

enum class LossKind { ce, oe, energy_margin, dpn, dul };

LossKind parse_loss_kind(std::string_view name);
std::string_view to_string(LossKind kind);

/// Hyperparameters for every objective; each kind reads the fields it needs.
///   ce:            ce(id)                            [dirichlet_ce selects the Dirichlet mean]
///   oe:            ce(id) + lambda oe(ood)
///   energy_margin: ce(id) + lambda energy_margin(id, ood; m_in, m_out)
///   dpn:           dpn(id, ood; target_alpha0, smoothing)
///   dul:           dul(id, ood, frozen; lambda, gamma, m_out, tau)
struct LossSpec {
  LossKind kind = LossKind::ce;
  double lambda = 0.3;
  double gamma = 2.0;
  double m_in = 10.0;
  double m_out = 30.0;
  int tau = 1;
  double target_alpha0 = 15.0;
  double smoothing = 0.01;
  AlphaMapping alpha_mapping = AlphaMapping::relu_plus_one;
  DuMeasure du_measure = DuMeasure::diff_entropy;
  std::optional<double> h0_constant;
  bool dirichlet_ce = false;

  /// Throws InputError: lambda, gamma >= 0; tau in {1, 2}; smoothing in [0, 0.5).
  void validate() const;
  DulParams dul_params() const;
};

/// Inputs to one objective evaluation. ood is required by every kind but ce;
/// frozen_ood_logits (the frozen reference evaluated on ood) only by dul.
struct LossInputs {
  Batch id;
  std::optional<Matrix> ood;
  std::optional<Matrix> frozen_ood_logits;
};

struct LossEvaluation {
  double value = 0.0;
  /// Detection/regularizer term before its weight (0 for ce).
  double ood_term = 0.0;
  ParamGrads grads;
};

/// Exact loss value and dL/dtheta. Throws InputError for an undefined pairing,
/// e.g. unlabeled id rows or a missing outlier batch.
LossEvaluation loss_backward(const Mlp& m, const LossInputs& in, const LossSpec& spec);

/// Loss value only, for finite-difference checks.
double loss_value(const Mlp& m, const LossInputs& in, const LossSpec& spec);

}  // namespace dul
