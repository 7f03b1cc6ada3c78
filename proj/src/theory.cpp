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


#include "dul/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dul/errors.hpp"
#include "dul/losses.hpp"
#include "dul/rng.hpp"

namespace dul {

HypothesisPool::HypothesisPool(std::vector<Mlp> members) : members_(std::move(members)) {
  if (members_.size() < 2) throw InputError("HypothesisPool: need at least 2 members");
  for (const auto& m : members_) {
    if (m.input_dim() != members_.front().input_dim() || m.output_dim() != members_.front().output_dim()) {
      throw InputError("HypothesisPool: members differ in input/output width");
    }
  }
}

HypothesisPool HypothesisPool::with_perturbations(std::vector<Mlp> bases, int n_perturbed, double rel_sigma,
                                                  std::uint64_t seed) {
  if (bases.empty()) throw InputError("HypothesisPool: no base models");
  const auto theta = bases.front().flat_parameters();
  double sq = 0.0;
  for (double v : theta) sq += v * v;
  const double sigma = rel_sigma * std::sqrt(sq / static_cast<double>(theta.size()));
  Rng rng(seed, Stream::pool);
  std::vector<Mlp> members = std::move(bases);
  for (int i = 0; i < n_perturbed; ++i) {
    auto t = theta;
    for (double& v : t) v += sigma * rng.normal();
    members.push_back(members.front().with_parameters(t));
  }
  return HypothesisPool(std::move(members));
}

double tvd(const SimplexVector& p, const SimplexVector& q) {
  if (p.size() != q.size()) throw InputError("tvd: length mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += std::abs(p[k] - q[k]);
  return 0.5 * s;
}

namespace {

// Row-wise softmax of a model on a sample matrix.
Matrix predicted(const Mlp& m, const Matrix& samples) {
  Matrix logits = mlp_forward(m, samples);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto p = softmax(logits.row(r));
    std::copy(p.begin(), p.end(), logits.row(r).begin());
  }
  return logits;
}

double mean_row_tvd(const Matrix& a, const Matrix& b) {
  double total = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) s += std::abs(a(r, k) - b(r, k));
    total += 0.5 * s;
  }
  return total / static_cast<double>(a.rows());
}

double mean_tvd_to_uniform(const Matrix& probs) {
  const double u = 1.0 / static_cast<double>(probs.cols());
  double total = 0.0;
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    double s = 0.0;
    for (double v : probs.row(r)) s += std::abs(v - u);
    total += 0.5 * s;
  }
  return total / static_cast<double>(probs.rows());
}

double pool_discrepancy(const std::vector<Matrix>& on_p, const std::vector<Matrix>& on_q) {
  double best = 0.0;  // diagonal pairs
  for (std::size_t i = 0; i < on_p.size(); ++i) {
    for (std::size_t j = 0; j < on_p.size(); ++j) {
      if (i == j) continue;
      best = std::max(best, mean_row_tvd(on_p[i], on_p[j]) - mean_row_tvd(on_q[i], on_q[j]));
    }
  }
  return best;
}

}  // namespace

double disparity(const Matrix& samples, const Mlp& f, const Mlp& f2) {
  if (samples.rows() == 0) throw InputError("disparity: no samples");
  return mean_row_tvd(predicted(f, samples), predicted(f2, samples));
}

double disparity_discrepancy(const Matrix& p_samples, const Matrix& q_samples, const HypothesisPool& pool) {
  if (p_samples.rows() == 0 || q_samples.rows() == 0) throw InputError("disparity_discrepancy: no samples");
  std::vector<Matrix> on_p, on_q;
  for (const auto& m : pool.members()) {
    on_p.push_back(predicted(m, p_samples));
    on_q.push_back(predicted(m, q_samples));
  }
  return pool_discrepancy(on_p, on_q);
}

InequalityReport lemma2_check(const Matrix& ood_logits) {
  if (ood_logits.rows() == 0) throw InputError("lemma2_check: no samples");
  const double log_k = std::log(static_cast<double>(ood_logits.cols()));
  const double u = 1.0 / static_cast<double>(ood_logits.cols());
  double lhs = 0.0;
  double rhs = 0.0;
  for (std::size_t r = 0; r < ood_logits.rows(); ++r) {
    const auto f = ood_logits.row(r);
    const auto p = softmax(f);
    double s = 0.0;
    for (double v : p) s += std::abs(v - u);
    lhs += 0.5 * s;
    rhs += std::sqrt(std::max(0.0, oe_sample_loss(f) - log_k) / 2.0);
  }
  const double n = static_cast<double>(ood_logits.rows());
  InequalityReport rep{lhs / n, rhs / n, false};
  rep.holds = rep.lhs <= rep.rhs + 1e-9;
  return rep;
}

DivergenceReport pinsker_check(const SimplexVector& p, const SimplexVector& q) {
  DivergenceReport r{tvd(p, q), kl_categorical(p, q), false};
  r.holds = 2.0 * r.tv * r.tv <= r.kl + 1e-12;
  return r;
}

DivergenceReport bretagnolle_huber_check(const SimplexVector& p, const SimplexVector& q) {
  DivergenceReport r{tvd(p, q), kl_categorical(p, q), false};
  r.holds = r.tv <= std::sqrt(1.0 - std::exp(-r.kl)) + 1e-12;
  return r;
}

BoundReport theorem1_bound(const LabeledDataset& cov, const LabeledDataset& sem, const Mlp& model,
                           const HypothesisPool& pool) {
  if (!cov.labels) throw InputError("theorem1_bound: covariate-shifted set must be labeled");
  if (cov.size() == 0 || sem.size() == 0) throw InputError("theorem1_bound: empty dataset");
  const Matrix cov_x = cov.inputs();
  const Matrix sem_x = sem.inputs();
  const std::size_t k = model.output_dim();
  const double kd = static_cast<double>(k);

  std::vector<Mlp> members = pool.members();
  members.push_back(model);
  std::vector<Matrix> on_cov, on_sem;
  for (const auto& m : members) {
    on_cov.push_back(predicted(m, cov_x));
    on_sem.push_back(predicted(m, sem_x));
  }

  BoundReport b;
  // One-hot ground truth: H(p) = 0 and TV(p, U) = 1 - 1/K for every row.
  const Matrix cov_logits = mlp_forward(model, cov_x);
  double ce = 0.0;
  double tv_label_uniform = 0.0;
  for (std::size_t r = 0; r < cov_logits.rows(); ++r) {
    const int y = (*cov.labels)[r];
    if (y < 0 || static_cast<std::size_t>(y) >= k) throw InputError("theorem1_bound: label out of range");
    const auto f = cov_logits.row(r);
    ce += log_sum_exp(f) - f[static_cast<std::size_t>(y)];
    std::vector<double> onehot(k, 0.0);
    onehot[static_cast<std::size_t>(y)] = 1.0;
    tv_label_uniform += tvd(SimplexVector(onehot), SimplexVector(std::vector<double>(k, 1.0 / kd)));
  }
  const double n_cov = static_cast<double>(cov_logits.rows());
  b.gerror = ce / n_cov;
  tv_label_uniform /= n_cov;
  const double mean_label_entropy = 0.0;

  b.lambda_const = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < members.size(); ++i) {
    b.lambda_const = std::min(b.lambda_const, mean_tvd_to_uniform(on_cov[i]) + mean_tvd_to_uniform(on_sem[i]));
  }
  b.d_ff = pool_discrepancy(on_cov, on_sem);

  const Matrix sem_logits = mlp_forward(model, sem_x);
  const double log_k = std::log(kd);
  double det = 0.0;
  for (std::size_t r = 0; r < sem_logits.rows(); ++r) {
    det += std::sqrt(2.0 * std::max(0.0, oe_sample_loss(sem_logits.row(r)) - log_k));
  }
  b.detection_term = det / static_cast<double>(sem_logits.rows());

  b.c_without_lambda = 2.0 * tv_label_uniform - 1.0 + mean_label_entropy;
  b.c_const = b.c_without_lambda - 2.0 * b.lambda_const;
  b.lower_bound = b.c_const - b.detection_term - 2.0 * b.d_ff;
  b.holds = b.gerror >= b.lower_bound - 1e-9;
  return b;
}

}  // namespace dul
