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


#include "dul/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dul/errors.hpp"

namespace dul {

std::vector<double> softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - mx);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

double log_sum_exp(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double f : logits) sum += std::exp(f - mx);
  return mx + std::log(sum);
}

namespace {

void check_labels(std::span<const int> labels, std::size_t rows, std::size_t k) {
  if (labels.size() != rows) throw InputError("label count does not match batch rows");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw InputError("label " + std::to_string(y) + " outside [0, " + std::to_string(k) + ")");
    }
  }
}

void require_rows(const Matrix& m, const char* what) {
  if (m.rows() == 0) throw InputError(std::string(what) + ": empty batch");
}

// Chain dL/dalpha through the alpha mapping into dL/dlogits.
void chain_alpha(std::span<const double> logits, AlphaMapping mapping, std::span<const double> dalpha,
                 double scale, std::span<double> out) {
  const auto dmap = alpha_mapping_derivative(logits, mapping);
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] += scale * dalpha[k] * dmap[k];
}

}  // namespace

LogitLoss ce_loss(const Matrix& logits, std::span<const int> labels, bool dirichlet_mode,
                  AlphaMapping mapping) {
  require_rows(logits, "ce_loss");
  check_labels(labels, logits.rows(), logits.cols());
  const std::size_t n = logits.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  LogitLoss out{0.0, Matrix(n, logits.cols())};
  for (std::size_t r = 0; r < n; ++r) {
    const auto f = logits.row(r);
    auto g = out.grad.row(r);
    const auto y = static_cast<std::size_t>(labels[r]);
    if (!dirichlet_mode) {
      out.value += log_sum_exp(f) - f[y];
      const auto p = softmax(f);
      for (std::size_t k = 0; k < f.size(); ++k) g[k] = inv_n * (p[k] - (k == y ? 1.0 : 0.0));
    } else {
      const auto d = alpha_from_logits(f, mapping);
      out.value += std::log(d.alpha0()) - std::log(d.alpha(y));
      std::vector<double> dalpha(f.size(), 1.0 / d.alpha0());
      dalpha[y] -= 1.0 / d.alpha(y);
      chain_alpha(f, mapping, dalpha, inv_n, g);
    }
  }
  out.value *= inv_n;
  return out;
}

double oe_sample_loss(std::span<const double> logits) {
  double mean = 0.0;
  for (double f : logits) mean += f;
  mean /= static_cast<double>(logits.size());
  return log_sum_exp(logits) - mean;
}

LogitLoss oe_loss(const Matrix& ood_logits) {
  require_rows(ood_logits, "oe_loss");
  const std::size_t n = ood_logits.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double inv_k = 1.0 / static_cast<double>(ood_logits.cols());
  LogitLoss out{0.0, Matrix(n, ood_logits.cols())};
  for (std::size_t r = 0; r < n; ++r) {
    const auto f = ood_logits.row(r);
    out.value += oe_sample_loss(f);
    const auto p = softmax(f);
    auto g = out.grad.row(r);
    for (std::size_t k = 0; k < f.size(); ++k) g[k] = inv_n * (p[k] - inv_k);
  }
  out.value *= inv_n;
  return out;
}

double energy_score(std::span<const double> logits) { return -log_sum_exp(logits); }

PairLoss energy_margin_loss(const Matrix& id_logits, const Matrix& ood_logits, double m_in, double m_out) {
  require_rows(id_logits, "energy_margin_loss (id)");
  require_rows(ood_logits, "energy_margin_loss (ood)");
  PairLoss out{0.0, Matrix(id_logits.rows(), id_logits.cols()),
               Matrix(ood_logits.rows(), ood_logits.cols())};
  // dE/df_k = -softmax_k.
  const double inv_id = 1.0 / static_cast<double>(id_logits.rows());
  double id_sum = 0.0;
  for (std::size_t r = 0; r < id_logits.rows(); ++r) {
    const auto f = id_logits.row(r);
    const double gap = energy_score(f) - m_in;
    if (gap <= 0.0) continue;
    id_sum += gap * gap;
    const auto p = softmax(f);
    auto g = out.id_grad.row(r);
    for (std::size_t k = 0; k < f.size(); ++k) g[k] = -2.0 * gap * p[k] * inv_id;
  }
  const double inv_ood = 1.0 / static_cast<double>(ood_logits.rows());
  double ood_sum = 0.0;
  for (std::size_t r = 0; r < ood_logits.rows(); ++r) {
    const auto f = ood_logits.row(r);
    const double gap = m_out - energy_score(f);
    if (gap <= 0.0) continue;
    ood_sum += gap * gap;
    const auto p = softmax(f);
    auto g = out.ood_grad.row(r);
    for (std::size_t k = 0; k < f.size(); ++k) g[k] = 2.0 * gap * p[k] * inv_ood;
  }
  out.value = id_sum * inv_id + ood_sum * inv_ood;
  return out;
}

SimplexVector energy_grad_weights(std::span<const double> logits) { return SimplexVector(softmax(logits)); }

PairLoss dpn_loss(const Matrix& id_logits, std::span<const int> id_labels, const Matrix& ood_logits,
                  double target_alpha0, double smoothing, AlphaMapping mapping) {
  require_rows(id_logits, "dpn_loss (id)");
  require_rows(ood_logits, "dpn_loss (ood)");
  const std::size_t k = id_logits.cols();
  check_labels(id_labels, id_logits.rows(), k);
  if (!(target_alpha0 > static_cast<double>(k))) throw InputError("dpn_loss: target_alpha0 must exceed K");
  if (!(smoothing >= 0.0 && smoothing < 0.5)) throw InputError("dpn_loss: smoothing must be in [0, 0.5)");

  PairLoss out{0.0, Matrix(id_logits.rows(), k), Matrix(ood_logits.rows(), ood_logits.cols())};
  const double inv_id = 1.0 / static_cast<double>(id_logits.rows());
  double id_sum = 0.0;
  for (std::size_t r = 0; r < id_logits.rows(); ++r) {
    const auto f = id_logits.row(r);
    std::vector<double> target(k, target_alpha0 * smoothing / static_cast<double>(k));
    target[static_cast<std::size_t>(id_labels[r])] += target_alpha0 * (1.0 - smoothing);
    const DirichletParams t(std::move(target));
    const auto pred = alpha_from_logits(f, mapping);
    id_sum += kl_dirichlet(t, pred);
    chain_alpha(f, mapping, kl_dirichlet_grad_second(t, pred), inv_id, out.id_grad.row(r));
  }
  const DirichletParams flat(std::vector<double>(ood_logits.cols(), 1.0));
  const double inv_ood = 1.0 / static_cast<double>(ood_logits.rows());
  double ood_sum = 0.0;
  for (std::size_t r = 0; r < ood_logits.rows(); ++r) {
    const auto f = ood_logits.row(r);
    const auto pred = alpha_from_logits(f, mapping);
    ood_sum += kl_dirichlet(pred, flat);
    chain_alpha(f, mapping, kl_dirichlet_grad_first(pred, flat), inv_ood, out.ood_grad.row(r));
  }
  out.value = id_sum * inv_id + ood_sum * inv_ood;
  return out;
}

DuMeasure parse_du_measure(std::string_view name) {
  if (name == "diff_entropy") return DuMeasure::diff_entropy;
  if (name == "neg_strength") return DuMeasure::neg_strength;
  throw InputError("unknown DU measure '" + std::string(name) + "'");
}

std::string_view to_string(DuMeasure m) {
  return m == DuMeasure::diff_entropy ? "diff_entropy" : "neg_strength";
}

double du_value(const DirichletParams& d, DuMeasure measure) {
  return measure == DuMeasure::diff_entropy ? diff_entropy(d) : -d.alpha0();
}

std::vector<double> du_grad(const DirichletParams& d, DuMeasure measure) {
  if (measure == DuMeasure::diff_entropy) return diff_entropy_grad(d);
  return std::vector<double>(d.size(), -1.0);
}

DulLoss dul_loss(const Matrix& id_logits, std::span<const int> id_labels, const Matrix& ood_logits,
                 const Matrix& frozen_ood_logits, const DulParams& params) {
  if (ood_logits.rows() != frozen_ood_logits.rows() || ood_logits.cols() != frozen_ood_logits.cols()) {
    throw InputError("dul_loss: current and frozen outlier logits differ in shape");
  }
  require_rows(ood_logits, "dul_loss (ood)");
  if (params.tau != 1 && params.tau != 2) throw InputError("dul_loss: tau must be 1 or 2");

  const auto ce = ce_loss(id_logits, id_labels, /*dirichlet_mode=*/true, params.mapping);
  DulLoss out;
  out.ce_term = ce.value;
  out.id_grad = ce.grad;
  out.ood_grad = Matrix(ood_logits.rows(), ood_logits.cols());

  const std::size_t k = ood_logits.cols();
  const double inv_n = 1.0 / static_cast<double>(ood_logits.rows());
  double hinge_sum = 0.0;
  double kl_sum = 0.0;
  for (std::size_t r = 0; r < ood_logits.rows(); ++r) {
    const auto f = ood_logits.row(r);
    const auto cur = alpha_from_logits(f, params.mapping);
    const auto ref = alpha_from_logits(frozen_ood_logits.row(r), params.mapping);
    std::vector<double> dalpha(k, 0.0);

    // Detection hinge on the DU measure.
    const double h = du_value(cur, params.du_measure);
    const double h0 = params.h0_constant ? *params.h0_constant : du_value(ref, params.du_measure);
    const double gap = h0 + params.m_out - h;
    if (gap > 0.0) {
      hinge_sum += params.tau == 1 ? gap : gap * gap;
      const double dgap = params.tau == 1 ? 1.0 : 2.0 * gap;
      const auto dh = du_grad(cur, params.du_measure);
      for (std::size_t j = 0; j < k; ++j) dalpha[j] -= params.lambda * dgap * dh[j];
    }

    // KL between expected categoricals keeps overall uncertainty in place.
    const auto p = expected_categorical(cur);
    const auto p0 = expected_categorical(ref);
    const double kl = kl_categorical(p, p0);
    kl_sum += kl;
    for (std::size_t j = 0; j < k; ++j) {
      // p_j = alpha_j / alpha0 is strictly positive under both mappings.
      dalpha[j] += params.gamma * (std::log(p[j] / p0[j]) - kl) / cur.alpha0();
    }
    chain_alpha(f, params.mapping, dalpha, inv_n, out.ood_grad.row(r));
  }
  out.detection_term = hinge_sum * inv_n;
  out.kl_term = kl_sum * inv_n;
  out.value = out.ce_term + params.lambda * out.detection_term + params.gamma * out.kl_term;
  return out;
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "ce") return LossKind::ce;
  if (name == "oe") return LossKind::oe;
  if (name == "energy_margin" || name == "energy") return LossKind::energy_margin;
  if (name == "dpn") return LossKind::dpn;
  if (name == "dul") return LossKind::dul;
  throw InputError("unknown loss kind '" + std::string(name) + "'");
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::ce: return "ce";
    case LossKind::oe: return "oe";
    case LossKind::energy_margin: return "energy_margin";
    case LossKind::dpn: return "dpn";
    case LossKind::dul: return "dul";
  }
  return "?";
}

void LossSpec::validate() const {
  if (!(lambda >= 0.0) || !(gamma >= 0.0)) throw InputError("LossSpec: lambda and gamma must be >= 0");
  if (tau != 1 && tau != 2) throw InputError("LossSpec: tau must be 1 or 2");
  if (!(smoothing >= 0.0 && smoothing < 0.5)) throw InputError("LossSpec: smoothing must be in [0, 0.5)");
  if (!std::isfinite(m_in) || !std::isfinite(m_out)) throw InputError("LossSpec: margins must be finite");
}

DulParams LossSpec::dul_params() const {
  return DulParams{lambda, gamma, m_out, tau, alpha_mapping, du_measure, h0_constant};
}

namespace {

struct LogitObjective {
  double value = 0.0;
  double ood_term = 0.0;
  Matrix id_grad;
  std::optional<Matrix> ood_grad;
};

const std::vector<int>& require_labels(const LossInputs& in) {
  if (!in.id.labels) throw InputError("loss_backward: objective needs labeled ID rows");
  return *in.id.labels;
}

const Matrix& require_ood(const LossInputs& in, LossKind kind) {
  if (!in.ood) {
    throw InputError("loss_backward: objective '" + std::string(to_string(kind)) + "' needs an outlier batch");
  }
  return *in.ood;
}

LogitObjective evaluate_logits(const Matrix& id_logits, const std::optional<Matrix>& ood_logits,
                               const LossInputs& in, const LossSpec& spec) {
  const auto& labels = require_labels(in);
  LogitObjective obj;
  switch (spec.kind) {
    case LossKind::ce: {
      auto ce = ce_loss(id_logits, labels, spec.dirichlet_ce, spec.alpha_mapping);
      obj.value = ce.value;
      obj.id_grad = std::move(ce.grad);
      break;
    }
    case LossKind::oe: {
      auto ce = ce_loss(id_logits, labels);
      auto oe = oe_loss(*ood_logits);
      obj.value = ce.value + spec.lambda * oe.value;
      obj.ood_term = oe.value;
      obj.id_grad = std::move(ce.grad);
      for (double& g : oe.grad.data()) g *= spec.lambda;
      obj.ood_grad = std::move(oe.grad);
      break;
    }
    case LossKind::energy_margin: {
      auto ce = ce_loss(id_logits, labels);
      auto em = energy_margin_loss(id_logits, *ood_logits, spec.m_in, spec.m_out);
      obj.value = ce.value + spec.lambda * em.value;
      obj.ood_term = em.value;
      obj.id_grad = std::move(ce.grad);
      auto id_g = obj.id_grad.data();
      auto em_g = em.id_grad.data();
      for (std::size_t i = 0; i < id_g.size(); ++i) id_g[i] += spec.lambda * em_g[i];
      for (double& g : em.ood_grad.data()) g *= spec.lambda;
      obj.ood_grad = std::move(em.ood_grad);
      break;
    }
    case LossKind::dpn: {
      auto d = dpn_loss(id_logits, labels, *ood_logits, spec.target_alpha0, spec.smoothing, spec.alpha_mapping);
      obj.value = d.value;
      obj.id_grad = std::move(d.id_grad);
      obj.ood_grad = std::move(d.ood_grad);
      break;
    }
    case LossKind::dul: {
      if (!in.frozen_ood_logits) throw InputError("loss_backward: dul needs frozen reference logits");
      auto d = dul_loss(id_logits, labels, *ood_logits, *in.frozen_ood_logits, spec.dul_params());
      obj.value = d.value;
      obj.ood_term = d.detection_term;
      obj.id_grad = std::move(d.id_grad);
      obj.ood_grad = std::move(d.ood_grad);
      break;
    }
  }
  return obj;
}

}  // namespace

LossEvaluation loss_backward(const Mlp& m, const LossInputs& in, const LossSpec& spec) {
  spec.validate();
  require_labels(in);
  const auto id_trace = mlp_forward_trace(m, in.id.inputs);
  std::optional<ForwardTrace> ood_trace;
  std::optional<Matrix> ood_logits;
  if (spec.kind != LossKind::ce) {
    ood_trace = mlp_forward_trace(m, require_ood(in, spec.kind));
    ood_logits = ood_trace->logits;
  }
  auto obj = evaluate_logits(id_trace.logits, ood_logits, in, spec);
  if (!std::isfinite(obj.value)) throw TrainingError("loss_backward: non-finite loss value");

  LossEvaluation out{obj.value, obj.ood_term, mlp_backward(m, id_trace, obj.id_grad)};
  if (ood_trace) out.grads += mlp_backward(m, *ood_trace, *obj.ood_grad);
  return out;
}

double loss_value(const Mlp& m, const LossInputs& in, const LossSpec& spec) {
  spec.validate();
  const Matrix id_logits = mlp_forward(m, in.id.inputs);
  std::optional<Matrix> ood_logits;
  if (spec.kind != LossKind::ce) ood_logits = mlp_forward(m, require_ood(in, spec.kind));
  return evaluate_logits(id_logits, ood_logits, in, spec).value;
}

}  // namespace dul
