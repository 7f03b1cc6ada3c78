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


#include "dul/dirichlet.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "dul/errors.hpp"
#include "dul/special_functions.hpp"

namespace dul {

DirichletParams::DirichletParams(std::vector<double> alpha) : alpha_(std::move(alpha)), alpha0_(0.0) {
  if (alpha_.size() < 2) {
    throw InputError("DirichletParams: need K >= 2 concentrations, got " +
                     std::to_string(alpha_.size()));
  }
  for (double a : alpha_) {
    if (!std::isfinite(a) || a < kMinAlpha) {
      throw InputError("DirichletParams: concentration must be finite and >= 1e-12, got " +
                       std::to_string(a));
    }
    alpha0_ += a;
  }
}

SimplexVector::SimplexVector(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw InputError("SimplexVector: empty");
  double sum = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InputError("SimplexVector: entry outside [0, 1]: " + std::to_string(v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw InputError("SimplexVector: entries sum to " + std::to_string(sum));
  }
}

AlphaMapping parse_alpha_mapping(std::string_view name) {
  if (name == "relu_plus_one") return AlphaMapping::relu_plus_one;
  if (name == "exp_relu") return AlphaMapping::exp_relu;
  throw InputError("unknown alpha mapping '" + std::string(name) + "'");
}

std::string_view to_string(AlphaMapping mapping) {
  return mapping == AlphaMapping::relu_plus_one ? "relu_plus_one" : "exp_relu";
}

DirichletParams alpha_from_logits(std::span<const double> logits, AlphaMapping mapping) {
  std::vector<double> alpha(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const double f = logits[k];
    if (!std::isfinite(f)) throw InputError("alpha_from_logits: non-finite logit");
    const double r = f > 0.0 ? f : 0.0;
    alpha[k] = mapping == AlphaMapping::relu_plus_one ? r + 1.0 : std::exp(r);
  }
  return DirichletParams(std::move(alpha));
}

std::vector<double> alpha_mapping_derivative(std::span<const double> logits, AlphaMapping mapping) {
  std::vector<double> d(logits.size(), 0.0);
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (logits[k] > 0.0) {
      d[k] = mapping == AlphaMapping::relu_plus_one ? 1.0 : std::exp(logits[k]);
    }
  }
  return d;
}

double diff_entropy(const DirichletParams& d) {
  const double a0 = d.alpha0();
  const double psi0 = digamma(a0);
  double h = -lgamma(a0);
  for (double a : d.alpha()) {
    h += lgamma(a) - (a - 1.0) * (digamma(a) - psi0);
  }
  return h;
}

std::vector<double> diff_entropy_grad(const DirichletParams& d) {
  const double k = static_cast<double>(d.size());
  const double common = (d.alpha0() - k) * trigamma(d.alpha0());
  std::vector<double> g(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double a = d.alpha(i);
    g[i] = -(a - 1.0) * trigamma(a) + common;
  }
  return g;
}

SimplexVector expected_categorical(const DirichletParams& d) {
  std::vector<double> p(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) p[k] = d.alpha(k) / d.alpha0();
  return SimplexVector(std::move(p));
}

double expected_data_entropy(const DirichletParams& d) {
  const double psi0 = digamma(d.alpha0() + 1.0);
  double e = 0.0;
  for (double a : d.alpha()) {
    e -= (a / d.alpha0()) * (digamma(a + 1.0) - psi0);
  }
  return e;
}

double total_uncertainty(const DirichletParams& d) {
  return categorical_entropy(expected_categorical(d));
}

double mutual_information(const DirichletParams& d) {
  return total_uncertainty(d) - expected_data_entropy(d);
}

double categorical_entropy(const SimplexVector& p) {
  double h = 0.0;
  for (double v : p.values()) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

double kl_categorical(const SimplexVector& p, const SimplexVector& q) {
  if (p.size() != q.size()) throw InputError("kl_categorical: length mismatch");
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] == 0.0) continue;
    if (q[k] == 0.0) throw DomainError("kl_categorical: q has zero mass where p does not");
    kl += p[k] * std::log(p[k] / q[k]);
  }
  // Rounding can leave -1e-17 for p == q.
  return kl > 0.0 ? kl : 0.0;
}

double kl_dirichlet(const DirichletParams& a, const DirichletParams& b) {
  if (a.size() != b.size()) throw InputError("kl_dirichlet: concentration lengths differ");
  const double psi_a0 = digamma(a.alpha0());
  double kl = lgamma(a.alpha0()) - lgamma(b.alpha0());
  for (std::size_t k = 0; k < a.size(); ++k) {
    kl += lgamma(b.alpha(k)) - lgamma(a.alpha(k)) +
          (a.alpha(k) - b.alpha(k)) * (digamma(a.alpha(k)) - psi_a0);
  }
  return kl;
}

std::vector<double> kl_dirichlet_grad_first(const DirichletParams& a, const DirichletParams& b) {
  if (a.size() != b.size()) throw InputError("kl_dirichlet: concentration lengths differ");
  const double common = (a.alpha0() - b.alpha0()) * trigamma(a.alpha0());
  std::vector<double> g(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    g[k] = (a.alpha(k) - b.alpha(k)) * trigamma(a.alpha(k)) - common;
  }
  return g;
}

std::vector<double> kl_dirichlet_grad_second(const DirichletParams& a, const DirichletParams& b) {
  if (a.size() != b.size()) throw InputError("kl_dirichlet: concentration lengths differ");
  const double psi_a0 = digamma(a.alpha0());
  const double psi_b0 = digamma(b.alpha0());
  std::vector<double> g(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    g[k] = digamma(b.alpha(k)) - psi_b0 - (digamma(a.alpha(k)) - psi_a0);
  }
  return g;
}

}  // namespace dul
