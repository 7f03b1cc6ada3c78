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


#include "dul/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <string>

#include "dul/errors.hpp"
#include "dul/losses.hpp"

namespace dul {

ScoreMethod parse_score_method(std::string_view name) {
  for (auto m : kAllScoreMethods) {
    if (to_string(m) == name) return m;
  }
  throw InputError("unknown score method '" + std::string(name) + "'");
}

std::string_view to_string(ScoreMethod m) {
  switch (m) {
    case ScoreMethod::msp: return "msp";
    case ScoreMethod::maxlogit: return "maxlogit";
    case ScoreMethod::energy: return "energy";
    case ScoreMethod::diffent: return "diffent";
    case ScoreMethod::strength: return "strength";
  }
  return "?";
}

double ood_score_from_logits(std::span<const double> logits, ScoreMethod method, AlphaMapping mapping) {
  switch (method) {
    case ScoreMethod::msp: {
      const auto p = softmax(logits);
      return -*std::max_element(p.begin(), p.end());
    }
    case ScoreMethod::maxlogit: return -*std::max_element(logits.begin(), logits.end());
    case ScoreMethod::energy: return energy_score(logits);
    case ScoreMethod::diffent: return diff_entropy(alpha_from_logits(logits, mapping));
    case ScoreMethod::strength: return -alpha_from_logits(logits, mapping).alpha0();
  }
  return 0.0;
}

double ood_score(const Mlp& m, const Point2& x, ScoreMethod method, AlphaMapping mapping) {
  return ood_score_from_logits(mlp_forward(m, x), method, mapping);
}

std::vector<double> ood_scores(const Mlp& m, const Matrix& inputs, ScoreMethod method, AlphaMapping mapping) {
  const Matrix logits = mlp_forward(m, inputs);
  std::vector<double> s(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) s[r] = ood_score_from_logits(logits.row(r), method, mapping);
  return s;
}

ScoreSet::ScoreSet(std::vector<double> id_scores, std::vector<double> ood_scores, ScoreMethod method)
    : id_(std::move(id_scores)), ood_(std::move(ood_scores)), method_(method) {
  if (id_.empty() || ood_.empty()) throw InputError("ScoreSet: both ID and OOD scores required");
  for (double v : id_) {
    if (!std::isfinite(v)) throw InputError("ScoreSet: non-finite ID score");
  }
  for (double v : ood_) {
    if (!std::isfinite(v)) throw InputError("ScoreSet: non-finite OOD score");
  }
}

ScoreSet make_score_set(const Mlp& m, const LabeledDataset& id, const LabeledDataset& ood, ScoreMethod method,
                        AlphaMapping mapping) {
  return ScoreSet(ood_scores(m, id.inputs(), method, mapping), ood_scores(m, ood.inputs(), method, mapping),
                  method);
}

double fpr_at_95tpr(const ScoreSet& s) {
  std::vector<double> id(s.id_scores().begin(), s.id_scores().end());
  std::sort(id.begin(), id.end());
  // ceil(0.95 n) in integer arithmetic.
  const std::size_t idx = (95 * id.size() + 99) / 100 - 1;
  const double threshold = id[idx];
  const auto accepted = std::count_if(s.ood_scores().begin(), s.ood_scores().end(),
                                      [&](double v) { return v <= threshold; });
  return static_cast<double>(accepted) / static_cast<double>(s.ood_scores().size());
}

namespace {

struct Tagged {
  double score;
  bool ood;
};

std::vector<Tagged> merged(const ScoreSet& s) {
  std::vector<Tagged> all;
  all.reserve(s.id_scores().size() + s.ood_scores().size());
  for (double v : s.id_scores()) all.push_back({v, false});
  for (double v : s.ood_scores()) all.push_back({v, true});
  return all;
}

}  // namespace

double auroc(const ScoreSet& s) {
  auto all = merged(s);
  std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) { return a.score < b.score; });
  // Mann-Whitney U from mid-ranks; every quantity is an exact half-integer.
  double ood_rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (all[t].ood) ood_rank_sum += mid_rank;
    }
    i = j;
  }
  const double m = static_cast<double>(s.ood_scores().size());
  const double n = static_cast<double>(s.id_scores().size());
  const double u = ood_rank_sum - m * (m + 1.0) / 2.0;
  return u / (n * m);
}

double aupr(const ScoreSet& s) {
  auto all = merged(s);
  std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) { return a.score > b.score; });
  const double positives = static_cast<double>(s.ood_scores().size());
  double tp = 0.0;
  double fp = 0.0;
  double prev_recall = 0.0;
  double ap = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) {
      (all[j].ood ? tp : fp) += 1.0;
      ++j;
    }
    const double recall = tp / positives;
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    i = j;
  }
  return ap;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

double accuracy(const Mlp& m, const LabeledDataset& d) {
  if (!d.labels || d.labels->empty()) throw InputError("accuracy: dataset has no labels");
  const Matrix logits = mlp_forward(m, d.inputs());
  std::size_t correct = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (static_cast<int>(argmax(logits.row(r))) == (*d.labels)[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

DetectorMetrics detector_metrics(const ScoreSet& s) {
  return DetectorMetrics{s.method(), fpr_at_95tpr(s), auroc(s), aupr(s)};
}

void EvalReport::validate() const {
  auto check = [](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw InputError(std::string("EvalReport: ") + what + " outside [0, 1]");
  };
  for (const auto& d : detectors) {
    check(d.fpr95, "fpr95");
    check(d.auroc, "auroc");
    check(d.aupr, "aupr");
  }
  check(id_acc, "id_acc");
  check(cov_acc, "cov_acc");
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_eval_csv(const EvalReport& r, std::ostream& out) {
  r.validate();
  out << kEvalCsvHeader << '\n';
  const auto& u = r.uncertainty;
  for (const auto& d : r.detectors) {
    out << to_string(d.method) << ',' << format_number(d.fpr95) << ',' << format_number(d.auroc) << ','
        << format_number(d.aupr) << ',' << format_number(r.id_acc) << ',' << format_number(r.cov_acc) << ','
        << format_number(u.mean_du_id) << ',' << format_number(u.mean_du_cov) << ','
        << format_number(u.mean_du_sem) << ',' << format_number(u.mean_total_id) << ','
        << format_number(u.mean_total_cov) << ',' << format_number(u.mean_total_sem) << '\n';
  }
}

}  // namespace dul
