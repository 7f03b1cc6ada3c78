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
#include <iosfwd>
#include <map>
#include <vector>

#include "dul/config.hpp"
#include "dul/metrics.hpp"
#include "dul/mlp.hpp"
#include "dul/synthdata.hpp"

namespace dul {

/// Every dataset of one run. cov[i] is the held-out ID set with noise level
/// cfg.data.eps_grid[i]; all levels share one noise draw, scaled.
struct Datasets {
  LabeledDataset id_train;
  LabeledDataset id_test;
  std::vector<LabeledDataset> cov;
  LabeledDataset sem_train;
  LabeledDataset sem_test;
};

/// Pure function of cfg (seed included).
Datasets make_datasets(const TrainConfig& cfg);

SemanticGeometry semantic_geometry(const TrainConfig& cfg);

/// Per-purpose seed derived from the run seed; distinct purposes never share a stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose);

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;      // mean objective over the epoch's iterations
  double ood_term = 0.0;  // mean unweighted detection/regularizer term
};

struct TrainResult {
  Mlp model;
  std::vector<EpochLog> trace;
};

/// CE-only training on ID data. Throws TrainingError on a non-finite loss.
TrainResult pretrain(const TrainConfig& cfg, const Datasets& data);

/// One ID batch and one SEM_TRAIN batch per iteration, objective per `method`.
/// For dul the frozen `pretrained` copy supplies the reference outputs.
/// Throws InputError for Method::none, TrainingError on a non-finite loss.
TrainResult finetune(const TrainConfig& cfg, const Mlp& pretrained, Method method, const Datasets& data);

/// Predictive head a method's model is read through: softmax for none/oe/energy,
/// Dirichlet mean for dpn/dul.
bool uses_dirichlet_head(Method method);
/// Score each method is deployed with.
ScoreMethod native_score(Method method, const TrainConfig& cfg);

/// Entropy of the model's predictive distribution under its head, per row.
std::vector<double> total_uncertainties(const Mlp& m, const Matrix& inputs, Method method, AlphaMapping mapping);
/// diff_entropy(alpha(f(x))) per row.
std::vector<double> distributional_uncertainties(const Mlp& m, const Matrix& inputs, AlphaMapping mapping);
double mean(const std::vector<double>& v);

/// ID accuracy on id_test, COV accuracy averaged over nonzero eps levels,
/// and FPR95/AUROC/AUPR on SEM_TEST for every scoring method.
EvalReport evaluate(const TrainConfig& cfg, const Mlp& model, Method method, const Datasets& data);

struct SweepRow {
  double eps = 0.0;
  double noise_std = 0.0;
  double cov_acc = 0.0;
  double mean_du = 0.0;
  double shifted_du = 0.0;  // mean_du minus the mean on held-out ID
  double mean_total = 0.0;
  double shifted_total = 0.0;
};

std::vector<SweepRow> noise_sweep(const TrainConfig& cfg, const Mlp& model, Method method, const Datasets& data);

inline constexpr std::string_view kSweepCsvHeader =
    "eps,noise_std,cov_acc,mean_du,shifted_du,mean_total,shifted_total";
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

inline constexpr std::string_view kTraceCsvHeader = "epoch,lr,loss,ood_term";
void write_trace_csv(const std::vector<EpochLog>& trace, std::ostream& out);

/// One detection-versus-generalization row per method, `none` being the
/// pretrained model. Detection metrics use the method's native score;
/// pretrained_fpr95 is the pretrained model under that same score.
struct DilemmaRow {
  Method method = Method::none;
  ScoreMethod score = ScoreMethod::msp;
  double fpr95 = 0.0;
  double pretrained_fpr95 = 0.0;
  double auroc = 0.0;
  double aupr = 0.0;
  double id_acc = 0.0;
  double cov_acc = 0.0;
  double sem_train_softmax_entropy = 0.0;
  double mean_du_sem = 0.0;
  double mean_total_sem = 0.0;
};

struct DilemmaResult {
  std::vector<DilemmaRow> rows;
  Mlp pretrained;
  std::map<Method, TrainResult> finetuned;
};

DilemmaResult repro_dilemma(const TrainConfig& cfg, const Datasets& data);

inline constexpr std::string_view kDilemmaCsvHeader =
    "method,score,fpr95,pretrained_fpr95,auroc,aupr,id_acc,cov_acc,sem_train_softmax_entropy,"
    "mean_du_sem,mean_total_sem";
void write_dilemma_csv(const std::vector<DilemmaRow>& rows, std::ostream& out);

}  // namespace dul
