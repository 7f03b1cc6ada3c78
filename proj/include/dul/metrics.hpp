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

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dul/dirichlet.hpp"
#include "dul/mlp.hpp"
#include "dul/synthdata.hpp"

namespace dul {

/// OOD scoring functions; each is oriented so that larger means "more OOD".
///   msp:      -max softmax
///   maxlogit: -max logit
///   energy:   -log sum exp(f)
///   diffent:  differential entropy of Dir(alpha(f))
///   strength: -alpha0
enum class ScoreMethod { msp, maxlogit, energy, diffent, strength };

ScoreMethod parse_score_method(std::string_view name);
std::string_view to_string(ScoreMethod m);
inline constexpr ScoreMethod kAllScoreMethods[] = {ScoreMethod::msp, ScoreMethod::maxlogit,
                                                   ScoreMethod::energy, ScoreMethod::diffent,
                                                   ScoreMethod::strength};

double ood_score_from_logits(std::span<const double> logits, ScoreMethod method,
                             AlphaMapping mapping = AlphaMapping::relu_plus_one);
double ood_score(const Mlp& m, const Point2& x, ScoreMethod method,
                 AlphaMapping mapping = AlphaMapping::relu_plus_one);
std::vector<double> ood_scores(const Mlp& m, const Matrix& inputs, ScoreMethod method,
                               AlphaMapping mapping = AlphaMapping::relu_plus_one);

/// Scores of ID (negative) and OOD (positive) samples under one method.
/// Invariants: both sides nonempty and finite.
class ScoreSet {
 public:
  ScoreSet(std::vector<double> id_scores, std::vector<double> ood_scores, ScoreMethod method);

  std::span<const double> id_scores() const { return id_; }
  std::span<const double> ood_scores() const { return ood_; }
  ScoreMethod method() const { return method_; }

 private:
  std::vector<double> id_;
  std::vector<double> ood_;
  ScoreMethod method_;
};

ScoreSet make_score_set(const Mlp& m, const LabeledDataset& id, const LabeledDataset& ood,
                        ScoreMethod method, AlphaMapping mapping = AlphaMapping::relu_plus_one);

/// Threshold = sorted ID score at index ceil(0.95 n) - 1, so at least 95% of ID
/// is accepted as IN (score <= threshold). Returns the fraction of OOD scores
/// that are also <= threshold.
double fpr_at_95tpr(const ScoreSet& s);

/// P(ood > id) + P(ood == id) / 2 over all pairs, via mid-ranks.
double auroc(const ScoreSet& s);

/// Average precision with OOD as the positive class: sum over distinct
/// descending thresholds of (recall step) * precision.
double aupr(const ScoreSet& s);

/// Fraction of rows whose argmax logit (lowest index on ties) equals the label.
/// Throws InputError on an unlabeled dataset.
double accuracy(const Mlp& m, const LabeledDataset& d);

std::size_t argmax(std::span<const double> v);

struct DetectorMetrics {
  ScoreMethod method;
  double fpr95 = 0.0;
  double auroc = 0.0;
  double aupr = 0.0;
};

DetectorMetrics detector_metrics(const ScoreSet& s);

/// Mean DU (differential entropy) and total uncertainty on each dataset role.
struct UncertaintyStats {
  double mean_du_id = 0.0;
  double mean_du_cov = 0.0;
  double mean_du_sem = 0.0;
  double mean_total_id = 0.0;
  double mean_total_cov = 0.0;
  double mean_total_sem = 0.0;
};

struct EvalReport {
  std::vector<DetectorMetrics> detectors;
  double id_acc = 0.0;
  double cov_acc = 0.0;
  UncertaintyStats uncertainty;

  /// Throws InputError when a rate leaves [0, 1].
  void validate() const;
};

inline constexpr std::string_view kEvalCsvHeader =
    "method,fpr95,auroc,aupr,id_acc,cov_acc,mean_du_id,mean_du_cov,mean_du_sem,"
    "mean_total_id,mean_total_cov,mean_total_sem";

/// One row per detector, header first.
void write_eval_csv(const EvalReport& r, std::ostream& out);

/// Shortest round-trip decimal, used by every CSV writer.
std::string format_number(double v);

}  // namespace dul
