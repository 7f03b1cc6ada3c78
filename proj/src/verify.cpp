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


#include "dul/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "dul/dirichlet.hpp"
#include "dul/losses.hpp"
#include "dul/metrics.hpp"
#include "dul/rng.hpp"
#include "dul/runner.hpp"
#include "dul/special_functions.hpp"
#include "dul/theory.hpp"

namespace dul {

int VerifyReport::violations() const {
  return static_cast<int>(std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.passed; }));
}

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;

// ln of a Gamma(shape, 1) draw. Marsaglia-Tsang; shapes below 1 are boosted
// through U^(1/a) and kept in log space so tiny draws do not underflow.
double log_gamma_draw(double shape, Rng& rng) {
  double log_boost = 0.0;
  if (shape < 1.0) {
    log_boost = std::log(1.0 - rng.uniform()) / shape;
    shape += 1.0;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - rng.uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return std::log(d * v) + log_boost;
  }
}

std::string describe(std::span<const double> v) {
  std::ostringstream o;
  o << '[';
  for (std::size_t i = 0; i < v.size(); ++i) o << (i ? " " : "") << format_number(v[i]);
  o << ']';
  return o.str();
}

// Tracks the worst case of one check across many inputs.
class Tally {
 public:
  Tally(std::string name, double tolerance) { r_.name = std::move(name), r_.rhs = tolerance, r_.passed = true; }

  // Error-style case: passes while err <= tolerance.
  void error(double err, const std::string& inputs) {
    ++r_.cases;
    if (!(err <= r_.rhs)) fail(inputs);
    if (!(err <= r_.lhs)) r_.lhs = err;  // NaN propagates into the report
  }

  // Inequality-style case: passes while lhs <= rhs; reports the tightest margin.
  void inequality(double lhs, double rhs, bool holds, const std::string& inputs) {
    ++r_.cases;
    if (r_.cases == 1 || rhs - lhs < best_margin_) {
      best_margin_ = rhs - lhs;
      r_.lhs = lhs;
      r_.rhs = rhs;
    }
    if (!holds) fail(inputs);
  }

  CheckResult done() { return std::move(r_); }

 private:
  void fail(const std::string& inputs) {
    if (r_.passed) r_.detail = inputs;
    r_.passed = false;
  }
  CheckResult r_;
  double best_margin_ = 0.0;
};

std::vector<double> random_alpha(Rng& rng, std::size_t k, double lo, double hi) {
  std::vector<double> a(k);
  for (auto& v : a) v = lo + (hi - lo) * rng.uniform();
  return a;
}

std::vector<double> random_simplex(Rng& rng, std::size_t k, bool with_zeros) {
  std::vector<double> p(k);
  double s = 0.0;
  for (auto& v : p) {
    v = with_zeros && rng.uniform() < 0.2 ? 0.0 : -std::log(1.0 - rng.uniform());
    s += v;
  }
  if (s == 0.0) {
    p[0] = 1.0;
    return p;
  }
  for (auto& v : p) v /= s;
  // Put the rounding residue on the largest entry so the sum is 1 to ~1 ulp.
  double t = 0.0;
  for (double v : p) t += v;
  *std::max_element(p.begin(), p.end()) += 1.0 - t;
  return p;
}

void special_function_checks(const VerifyOptions& opt, std::vector<CheckResult>& out) {
  const auto psi = [&](double x) { return digamma(x) + opt.digamma_offset; };
  const auto known = [&](const char* name, double got, double want) {
    Tally t(name, 1e-10);
    t.error(std::abs(got - want), "");
    out.push_back(t.done());
  };
  known("digamma(1)", psi(1.0), -kEulerGamma);
  known("digamma(0.5)", psi(0.5), -kEulerGamma - 2.0 * std::numbers::ln2);
  known("trigamma(1)", trigamma(1.0), std::numbers::pi * std::numbers::pi / 6.0);

  Rng rng(opt.seed, Stream::fuzz);
  Tally dg("digamma recurrence", 1e-12);
  Tally tg("trigamma recurrence", 1e-12);
  Tally lg("lgamma recurrence", 1e-12);
  for (int i = 0; i < 1000; ++i) {
    const double x = 0.05 + 49.95 * rng.uniform();
    const std::string in = "x=" + format_number(x);
    // Tolerance is relative to the size of the step term.
    dg.error(std::abs(psi(x + 1.0) - psi(x) - 1.0 / x) / std::max(1.0, 1.0 / x), in);
    tg.error(std::abs(trigamma(x) - trigamma(x + 1.0) - 1.0 / (x * x)) / std::max(1.0, 1.0 / (x * x)), in);
    lg.error(std::abs(lgamma(x + 1.0) - lgamma(x) - std::log(x)) / std::max(1.0, std::abs(lgamma(x + 1.0))), in);
  }
  out.push_back(dg.done());
  out.push_back(tg.done());
  out.push_back(lg.done());
}

// Closed-form differential entropy built on the (possibly faulted) digamma.
double diff_entropy_with(const std::vector<double>& a, const auto& psi) {
  double a0 = 0.0;
  double h = 0.0;
  for (double v : a) {
    a0 += v;
    h += lgamma(v);
  }
  h -= lgamma(a0);
  for (double v : a) h -= (v - 1.0) * (psi(v) - psi(a0));
  return h;
}

void dirichlet_checks(const VerifyOptions& opt, std::vector<CheckResult>& out) {
  const auto psi = [&](double x) { return digamma(x) + opt.digamma_offset; };
  {
    Tally t("diff_entropy(1,1,1) = -ln 2", 1e-12);
    t.error(std::abs(diff_entropy(DirichletParams({1.0, 1.0, 1.0})) + std::numbers::ln2), "alpha=[1 1 1]");
    out.push_back(t.done());
  }
  {
    // Absolute anchor: Dir(1,1) is uniform on the segment, entropy 0, and
    // E[ln mu_1] = psi(1) - psi(2) = -1.
    Tally t("E[ln mu] under Dir(1,1)", 1e-10);
    t.error(std::abs(psi(1.0) - digamma(2.0) + 1.0), "alpha=[1 1]");
    out.push_back(t.done());
  }
  Rng rng(opt.seed ^ 0xD1u, Stream::fuzz);
  {
    Tally t("diff_entropy vs Monte Carlo (3 SE)", 3.0);
    for (int i = 0; i < opt.mc_alphas; ++i) {
      const std::size_t k = 2 + rng.below(4);
      const auto a = random_alpha(rng, k, 0.2, 50.0);
      const auto mc = mc_diff_entropy(a, opt.mc_samples, rng.next());
      const double h = diff_entropy_with(a, psi);
      t.error(std::abs(h - mc.mean) / mc.std_error, "alpha=" + describe(a));
    }
    out.push_back(t.done());
  }
  {
    Tally dec("total = expected data entropy + mutual information", 1e-12);
    Tally mi("mutual_information >= 0", 0.0);
    for (int i = 0; i < opt.fuzz_cases; ++i) {
      const std::size_t k = 2 + rng.below(9);
      const auto a = random_alpha(rng, k, 0.01, 100.0);
      const DirichletParams d(a);
      const std::string in = "alpha=" + describe(a);
      const double mi_v = mutual_information(d);
      // Expected data entropy rebuilt term by term: -sum p_k (psi(a_k + 1) - psi(a0 + 1)).
      double ede = 0.0;
      for (double v : a) ede -= v / d.alpha0() * (psi(v + 1.0) - psi(d.alpha0() + 1.0));
      dec.error(std::abs(total_uncertainty(d) - (ede + mi_v)), in);
      mi.inequality(-mi_v, 0.0, mi_v >= 0.0, in);
    }
    out.push_back(dec.done());
    out.push_back(mi.done());
  }
}

void divergence_checks(const VerifyOptions& opt, std::vector<CheckResult>& out) {
  Rng rng(opt.seed ^ 0xD2u, Stream::fuzz);
  Tally pin("Pinsker: 2 TV^2 <= KL", 0.0);
  Tally bh("Bretagnolle-Huber: TV <= sqrt(1 - exp(-KL))", 0.0);
  Tally tri("TV triangle inequality", 0.0);
  Tally lem("OE bound: TV(softmax, U) <= sqrt((OE - ln K) / 2)", 0.0);
  for (int i = 0; i < opt.fuzz_cases; ++i) {
    const std::size_t k = 2 + rng.below(9);
    const SimplexVector p(random_simplex(rng, k, true));
    const SimplexVector q(random_simplex(rng, k, false));
    const SimplexVector r(random_simplex(rng, k, true));
    const std::string in = "p=" + describe(p.values()) + " q=" + describe(q.values());
    const auto a = pinsker_check(p, q);
    pin.inequality(2.0 * a.tv * a.tv, a.kl, a.holds, in);
    const auto b = bretagnolle_huber_check(p, q);
    bh.inequality(b.tv, std::sqrt(1.0 - std::exp(-b.kl)), b.holds, in);
    const double lhs = tvd(p, r);
    const double rhs = tvd(p, q) + tvd(q, r);
    tri.inequality(lhs, rhs, lhs <= rhs + 1e-15, in);

    Matrix logits(1 + rng.below(8), k);
    const double scale = std::exp(4.0 * rng.uniform() - 2.0);
    for (auto& v : logits.data()) v = scale * rng.normal();
    const auto l2 = lemma2_check(logits);
    lem.inequality(l2.lhs, l2.rhs, l2.holds, "logits=" + describe(logits.data()));
  }
  out.push_back(pin.done());
  out.push_back(bh.done());
  out.push_back(tri.done());
  out.push_back(lem.done());
}

void bound_case(Tally& t, const LabeledDataset& cov, const LabeledDataset& sem, const Mlp& model,
                const HypothesisPool& pool, const std::string& in) {
  const auto b = theorem1_bound(cov, sem, model, pool);
  t.inequality(b.lower_bound, b.gerror, b.holds, in);
}

void bound_checks(const TrainConfig& cfg, const VerifyOptions& opt, const std::vector<Mlp>& trained,
                  std::vector<CheckResult>& out) {
  Rng rng(opt.seed ^ 0xD3u, Stream::fuzz);
  Tally fuzz("generalization lower bound (fuzzed)", 0.0);
  for (int i = 0; i < opt.bound_cases; ++i) {
    const int k = 2 + static_cast<int>(rng.below(3));
    const std::vector<std::size_t> sizes{2, 4 + rng.below(8), static_cast<std::size_t>(k)};
    const auto model = mlp_init(sizes, rng.below(2) ? Activation::relu : Activation::tanh, rng.next());
    // Scaling the weights spreads logits from near-uniform to confident.
    auto theta = model.flat_parameters();
    const double s = std::exp(3.0 * rng.uniform());
    for (auto& v : theta) v *= s;
    const auto scaled = model.with_parameters(theta);
    const auto pool = HypothesisPool::with_perturbations({scaled}, 2, 0.01 + rng.uniform(), rng.next());
    const auto id = make_id_blobs(k, 5 + static_cast<int>(rng.below(20)), 4.0, 0.5, rng.next());
    const auto cov = perturb_covariate(id, 3.0 * rng.uniform(), rng.next());
    const SemanticGeometry g{k, 8.0, 0.5, 12.0};
    const auto sem = make_semantic_ood(rng.below(2) ? SemanticSplit::train : SemanticSplit::test,
                                       5 + static_cast<int>(rng.below(40)), rng.next(), g);
    bound_case(fuzz, cov, sem, scaled, pool, "case " + std::to_string(i));
  }
  out.push_back(fuzz.done());

  if (trained.empty()) return;
  Tally exp("generalization lower bound (trained models)", 0.0);
  const auto data = make_datasets(cfg);
  const auto pool = HypothesisPool::with_perturbations(trained, 8, 0.01, derive_seed(cfg.seed, 0x9001));
  for (std::size_t m = 0; m < trained.size(); ++m) {
    for (const auto& cov : data.cov) {
      for (const auto* sem : {&data.sem_train, &data.sem_test}) {
        bound_case(exp, cov, *sem, trained[m], pool,
                   "model " + std::to_string(m) + " eps=" + format_number(cov.noise_eps) + " sem=" +
                       std::string(to_string(sem->tag)));
      }
    }
  }
  out.push_back(exp.done());
}

}  // namespace

McEstimate mc_diff_entropy(const std::vector<double>& alpha, int samples, std::uint64_t seed) {
  Rng rng(seed, Stream::fuzz);
  double a0 = 0.0;
  double log_norm = 0.0;
  for (double a : alpha) {
    a0 += a;
    log_norm -= lgamma(a);
  }
  log_norm += lgamma(a0);
  std::vector<double> lg(alpha.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int s = 0; s < samples; ++s) {
    double mx = -INFINITY;
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      lg[k] = log_gamma_draw(alpha[k], rng);
      mx = std::max(mx, lg[k]);
    }
    double z = 0.0;
    for (double v : lg) z += std::exp(v - mx);
    const double log_total = mx + std::log(z);
    double log_p = log_norm;
    for (std::size_t k = 0; k < alpha.size(); ++k) log_p += (alpha[k] - 1.0) * (lg[k] - log_total);
    sum += -log_p;
    sum_sq += log_p * log_p;
  }
  const double n = static_cast<double>(samples);
  const double m = sum / n;
  const double var = std::max(0.0, (sum_sq / n - m * m) * n / (n - 1.0));
  return {m, std::sqrt(var / n)};
}

VerifyReport verify(const TrainConfig& cfg, const VerifyOptions& opt, const std::vector<Mlp>& trained) {
  VerifyReport r;
  special_function_checks(opt, r.checks);
  dirichlet_checks(opt, r.checks);
  divergence_checks(opt, r.checks);
  bound_checks(cfg, opt, trained, r.checks);
  return r;
}

void write_verify_text(const VerifyReport& r, std::ostream& out) {
  for (const auto& c : r.checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << "  cases=" << c.cases << "  lhs=" << format_number(c.lhs)
        << "  rhs=" << format_number(c.rhs) << '\n';
    if (!c.passed) out << "     offending input: " << c.detail << '\n';
  }
  out << r.violations() << " violation(s) in " << r.checks.size() << " checks\n";
}

void write_verify_csv(const VerifyReport& r, std::ostream& out) {
  out << kVerifyCsvHeader << '\n';
  for (const auto& c : r.checks) {
    out << '"' << c.name << "\"," << c.cases << ',' << format_number(c.lhs) << ',' << format_number(c.rhs) << ','
        << (c.passed ? "true" : "false") << '\n';
  }
}

}  // namespace dul
