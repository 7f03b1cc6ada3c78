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


// Reference implementations used only by the tests. Nothing here calls into
// the library's numerics, so agreement is meaningful.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace oracle {

inline double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

inline std::vector<double> softmax(std::span<const double> f) {
  const double mx = *std::max_element(f.begin(), f.end());
  std::vector<double> p(f.size());
  double z = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) z += p[k] = std::exp(f[k] - mx);
  for (double& v : p) v /= z;
  return p;
}

inline double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

// Draws ln G for G ~ Gamma(shape, 1). Shapes below 1 use the boost
// G(a) = G(a + 1) U^(1/a) in log space so tiny draws do not underflow.
class LogGamma {
 public:
  explicit LogGamma(double shape) : shape_(shape), g_(shape < 1.0 ? shape + 1.0 : shape, 1.0) {}

  double operator()(std::mt19937_64& gen) {
    const double x = std::log(g_(gen));
    if (shape_ >= 1.0) return x;
    double u = unif_(gen);
    while (u <= 0.0) u = unif_(gen);
    return x + std::log(u) / shape_;
  }

 private:
  double shape_;
  std::gamma_distribution<double> g_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

// ln mu for one Dirichlet draw, written into lg.
inline void log_dirichlet_draw(std::vector<LogGamma>& comps, std::mt19937_64& gen, std::vector<double>& lg) {
  lg.resize(comps.size());
  double mx = -INFINITY;
  for (std::size_t k = 0; k < comps.size(); ++k) mx = std::max(mx, lg[k] = comps[k](gen));
  double z = 0.0;
  for (double v : lg) z += std::exp(v - mx);
  const double lt = mx + std::log(z);
  for (double& v : lg) v -= lt;
}

// ln p(mu) under Dir(alpha), normaliser from std::lgamma computed once.
class LogDensity {
 public:
  explicit LogDensity(std::span<const double> alpha) : alpha_(alpha.begin(), alpha.end()) {
    norm_ = std::lgamma(sum(alpha));
    for (double a : alpha) norm_ -= std::lgamma(a);
  }

  double operator()(std::span<const double> log_mu) const {
    double lp = norm_;
    for (std::size_t k = 0; k < alpha_.size(); ++k) lp += (alpha_[k] - 1.0) * log_mu[k];
    return lp;
  }

 private:
  std::vector<double> alpha_;
  double norm_;
};

struct Mc {
  double mean = 0.0;
  double se = 0.0;
};

// Sample mean and standard error of fn(ln mu) under Dir(alpha).
template <class Fn>
Mc dirichlet_mc(std::span<const double> alpha, int n, std::uint64_t seed, Fn&& fn) {
  std::mt19937_64 gen(seed);
  std::vector<LogGamma> comps(alpha.begin(), alpha.end());
  std::vector<double> lm;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    log_dirichlet_draw(comps, gen, lm);
    const double v = fn(std::span<const double>(lm));
    s += v;
    s2 += v * v;
  }
  const double m = s / n;
  return {m, std::sqrt(std::max(0.0, s2 / n - m * m) / (n - 1.0))};
}

// Fraction of OOD accepted at the tightest threshold accepting >= 95% of ID,
// found by trying every candidate score.
inline double brute_fpr95(std::span<const double> id, std::span<const double> ood) {
  std::vector<double> cand(id.begin(), id.end());
  cand.insert(cand.end(), ood.begin(), ood.end());
  double best = INFINITY;
  for (double t : cand) {
    std::size_t acc = 0;
    for (double v : id) acc += v <= t;
    if (acc * 100 >= 95 * id.size()) best = std::min(best, t);
  }
  std::size_t fp = 0;
  for (double v : ood) fp += v <= best;
  return static_cast<double>(fp) / static_cast<double>(ood.size());
}

// Mann-Whitney by pair counting, ties half.
inline double brute_auroc(std::span<const double> id, std::span<const double> ood) {
  double wins = 0.0;
  for (double o : ood)
    for (double i : id) wins += o > i ? 1.0 : (o == i ? 0.5 : 0.0);
  return wins / (static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

// Central differences of f over every coordinate of x.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double dn = f(x);
    x[i] = x0;
    g[i] = (up - dn) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double rel_error(std::span<const double> a, std::span<const double> b) {
  double d = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(d) / scale;
}

// Average ranks (1-based), ties share the mean rank.
inline std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t t = i; t <= j; ++t) r[idx[t]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

// Pearson correlation of ranks.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = sum(rx) / n, my = sum(ry) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxx == 0.0 || syy == 0.0 ? 0.0 : sxy / std::sqrt(sxx * syy);
}

}  // namespace oracle
