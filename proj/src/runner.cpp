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


#include "dul/runner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "dul/dirichlet.hpp"
#include "dul/errors.hpp"
#include "dul/losses.hpp"
#include "dul/rng.hpp"

namespace dul {

namespace {

enum Purpose : std::uint64_t {
  kIdTest = 1,
  kCovNoise = 2,
  kSemTrain = 3,
  kSemTest = 4,
  kPretrainBatches = 5,
  kFinetuneBatches = 16,  // + method index
};

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) {
  return Rng(seed, 0x100 + purpose).next();
}

SemanticGeometry semantic_geometry(const TrainConfig& cfg) {
  const auto& d = cfg.data;
  return SemanticGeometry{d.k, d.sem_radius, d.sem_sigma, d.ring_radius, d.sem_test_offset, d.ring_start, d.ring_span};
}

Datasets make_datasets(const TrainConfig& cfg) {
  cfg.validate();
  const auto& d = cfg.data;
  Datasets out{
      make_id_blobs(d.k, d.n_per_class, d.radius, d.sigma, cfg.seed),
      make_id_blobs(d.k, d.n_test_per_class, d.radius, d.sigma, derive_seed(cfg.seed, kIdTest)),
      {},
      make_semantic_ood(SemanticSplit::train, d.n_sem_train, derive_seed(cfg.seed, kSemTrain), semantic_geometry(cfg)),
      make_semantic_ood(SemanticSplit::test, d.n_sem_test, derive_seed(cfg.seed, kSemTest), semantic_geometry(cfg)),
  };
  for (double eps : d.eps_grid) {
    out.cov.push_back(perturb_covariate(out.id_test, d.noise_std(eps), derive_seed(cfg.seed, kCovNoise)));
    out.cov.back().noise_eps = eps;
  }
  return out;
}

namespace {

Matrix gather(const LabeledDataset& d, std::span<const std::size_t> idx) {
  Matrix m(idx.size(), 2);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    m(i, 0) = d.points[idx[i]][0];
    m(i, 1) = d.points[idx[i]][1];
  }
  return m;
}

Batch gather_batch(const LabeledDataset& d, std::span<const std::size_t> idx) {
  Batch b{gather(d, idx), std::nullopt};
  if (d.labels) {
    std::vector<int> y(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) y[i] = (*d.labels)[idx[i]];
    b.labels = std::move(y);
  }
  return b;
}

double epoch_lr(const TrainConfig& cfg, int epoch, int total, double lr0) {
  return cfg.schedule == Schedule::cosine ? cosine_lr(epoch, total, lr0) : lr0;
}

// Shared SGD loop. `frozen` is set only for objectives that need reference outputs.
TrainResult train(const TrainConfig& cfg, Mlp model, const LossSpec& spec, int epochs, double lr0,
                  const Datasets& data, bool with_ood, const Mlp* frozen, Rng rng) {
  std::vector<std::size_t> order(data.id_train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto velocity = ParamGrads::zeros_like(model);
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_id);
  std::vector<EpochLog> trace;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    const double lr = epoch_lr(cfg, epoch, epochs, lr0);
    rng.shuffle(order);
    double loss_sum = 0.0;
    double ood_sum = 0.0;
    int iters = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      LossInputs in{gather_batch(data.id_train, std::span(order).subspan(start, len)), std::nullopt, std::nullopt};
      if (with_ood) {
        std::vector<std::size_t> pick(static_cast<std::size_t>(cfg.batch_ood));
        for (auto& p : pick) p = static_cast<std::size_t>(rng.below(data.sem_train.size()));
        in.ood = gather(data.sem_train, pick);
        if (frozen != nullptr) in.frozen_ood_logits = mlp_forward(*frozen, *in.ood);
      }
      LossEvaluation ev;
      try {
        ev = loss_backward(model, in, spec);
      } catch (const TrainingError& e) {
        throw TrainingError(std::string(to_string(spec.kind)) + " training diverged at epoch " +
                            std::to_string(epoch) + ", iteration " + std::to_string(iters) + ": " + e.what());
      }
      loss_sum += ev.value;
      ood_sum += ev.ood_term;
      ++iters;
      auto step = sgd_step(model, ev.grads, velocity, lr, cfg.momentum, cfg.weight_decay);
      model = std::move(step.model);
      velocity = std::move(step.velocity);
    }
    trace.push_back({epoch, lr, loss_sum / iters, ood_sum / iters});
  }
  return TrainResult{std::move(model), std::move(trace)};
}

}  // namespace

TrainResult pretrain(const TrainConfig& cfg, const Datasets& data) {
  cfg.validate();
  LossSpec spec;
  spec.kind = LossKind::ce;
  spec.alpha_mapping = cfg.alpha_mapping;
  Mlp init = mlp_init(cfg.arch, cfg.activation, cfg.seed);
  return train(cfg, std::move(init), spec, cfg.pretrain_epochs, cfg.lr0, data, false, nullptr,
               Rng(derive_seed(cfg.seed, kPretrainBatches), Stream::batching));
}

TrainResult finetune(const TrainConfig& cfg, const Mlp& pretrained, Method method, const Datasets& data) {
  cfg.validate();
  if (method == Method::none) throw InputError("finetune: method 'none' has no finetuning objective");
  const LossSpec spec = cfg.loss_spec(method);
  const Mlp* frozen = method == Method::dul ? &pretrained : nullptr;
  return train(cfg, pretrained, spec, cfg.finetune_epochs, cfg.finetune_lr0, data, true, frozen,
               Rng(derive_seed(cfg.seed, kFinetuneBatches + static_cast<std::uint64_t>(method)), Stream::batching));
}

bool uses_dirichlet_head(Method method) { return method == Method::dpn || method == Method::dul; }

ScoreMethod native_score(Method method, const TrainConfig& cfg) {
  switch (method) {
    case Method::none:
    case Method::oe: return ScoreMethod::msp;
    case Method::energy: return ScoreMethod::energy;
    case Method::dpn: return ScoreMethod::diffent;
    case Method::dul:
      return cfg.dul.du_measure == DuMeasure::neg_strength ? ScoreMethod::strength : ScoreMethod::diffent;
  }
  return ScoreMethod::msp;
}

std::vector<double> total_uncertainties(const Mlp& m, const Matrix& inputs, Method method, AlphaMapping mapping) {
  const Matrix logits = mlp_forward(m, inputs);
  std::vector<double> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    out[r] = uses_dirichlet_head(method) ? total_uncertainty(alpha_from_logits(logits.row(r), mapping))
                                         : categorical_entropy(SimplexVector(softmax(logits.row(r))));
  }
  return out;
}

std::vector<double> distributional_uncertainties(const Mlp& m, const Matrix& inputs, AlphaMapping mapping) {
  const Matrix logits = mlp_forward(m, inputs);
  std::vector<double> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) out[r] = diff_entropy(alpha_from_logits(logits.row(r), mapping));
  return out;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) throw InputError("mean: empty input");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

namespace {

// COV levels that actually carry noise; falls back to every level.
std::vector<const LabeledDataset*> shifted_cov(const Datasets& data) {
  std::vector<const LabeledDataset*> out;
  for (const auto& c : data.cov) {
    if (c.noise_eps > 0.0) out.push_back(&c);
  }
  if (out.empty()) {
    for (const auto& c : data.cov) out.push_back(&c);
  }
  return out;
}

double mean_cov_accuracy(const Mlp& model, const Datasets& data) {
  const auto cov = shifted_cov(data);
  double s = 0.0;
  for (const auto* c : cov) s += accuracy(model, *c);
  return s / static_cast<double>(cov.size());
}

}  // namespace

EvalReport evaluate(const TrainConfig& cfg, const Mlp& model, Method method, const Datasets& data) {
  EvalReport r;
  for (auto sm : kAllScoreMethods) {
    r.detectors.push_back(detector_metrics(make_score_set(model, data.id_test, data.sem_test, sm, cfg.alpha_mapping)));
  }
  r.id_acc = accuracy(model, data.id_test);
  r.cov_acc = mean_cov_accuracy(model, data);

  auto& u = r.uncertainty;
  const auto cov = shifted_cov(data);
  u.mean_du_id = mean(distributional_uncertainties(model, data.id_test.inputs(), cfg.alpha_mapping));
  u.mean_total_id = mean(total_uncertainties(model, data.id_test.inputs(), method, cfg.alpha_mapping));
  for (const auto* c : cov) {
    u.mean_du_cov += mean(distributional_uncertainties(model, c->inputs(), cfg.alpha_mapping));
    u.mean_total_cov += mean(total_uncertainties(model, c->inputs(), method, cfg.alpha_mapping));
  }
  u.mean_du_cov /= static_cast<double>(cov.size());
  u.mean_total_cov /= static_cast<double>(cov.size());
  u.mean_du_sem = mean(distributional_uncertainties(model, data.sem_test.inputs(), cfg.alpha_mapping));
  u.mean_total_sem = mean(total_uncertainties(model, data.sem_test.inputs(), method, cfg.alpha_mapping));
  r.validate();
  return r;
}

std::vector<SweepRow> noise_sweep(const TrainConfig& cfg, const Mlp& model, Method method, const Datasets& data) {
  if (data.cov.empty()) throw InputError("noise_sweep: empty eps grid");
  const double du_id = mean(distributional_uncertainties(model, data.id_test.inputs(), cfg.alpha_mapping));
  const double total_id = mean(total_uncertainties(model, data.id_test.inputs(), method, cfg.alpha_mapping));
  std::vector<SweepRow> rows;
  for (const auto& c : data.cov) {
    SweepRow row;
    row.eps = c.noise_eps;
    row.noise_std = cfg.data.noise_std(c.noise_eps);
    row.cov_acc = accuracy(model, c);
    row.mean_du = mean(distributional_uncertainties(model, c.inputs(), cfg.alpha_mapping));
    row.shifted_du = row.mean_du - du_id;
    row.mean_total = mean(total_uncertainties(model, c.inputs(), method, cfg.alpha_mapping));
    row.shifted_total = row.mean_total - total_id;
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    out << format_number(r.eps) << ',' << format_number(r.noise_std) << ',' << format_number(r.cov_acc) << ','
        << format_number(r.mean_du) << ',' << format_number(r.shifted_du) << ',' << format_number(r.mean_total) << ','
        << format_number(r.shifted_total) << '\n';
  }
}

void write_trace_csv(const std::vector<EpochLog>& trace, std::ostream& out) {
  out << kTraceCsvHeader << '\n';
  for (const auto& e : trace) {
    out << e.epoch << ',' << format_number(e.lr) << ',' << format_number(e.loss) << ',' << format_number(e.ood_term)
        << '\n';
  }
}

namespace {

double mean_softmax_entropy(const Mlp& m, const LabeledDataset& d) {
  return mean(total_uncertainties(m, d.inputs(), Method::none, AlphaMapping::relu_plus_one));
}

DilemmaRow dilemma_row(const TrainConfig& cfg, const Mlp& pretrained, const Mlp& model, Method method,
                       const Datasets& data) {
  DilemmaRow row;
  row.method = method;
  row.score = native_score(method, cfg);
  const auto det = detector_metrics(make_score_set(model, data.id_test, data.sem_test, row.score, cfg.alpha_mapping));
  row.fpr95 = det.fpr95;
  row.auroc = det.auroc;
  row.aupr = det.aupr;
  row.pretrained_fpr95 =
      fpr_at_95tpr(make_score_set(pretrained, data.id_test, data.sem_test, row.score, cfg.alpha_mapping));
  row.id_acc = accuracy(model, data.id_test);
  row.cov_acc = mean_cov_accuracy(model, data);
  row.sem_train_softmax_entropy = mean_softmax_entropy(model, data.sem_train);
  row.mean_du_sem = mean(distributional_uncertainties(model, data.sem_test.inputs(), cfg.alpha_mapping));
  row.mean_total_sem = mean(total_uncertainties(model, data.sem_test.inputs(), method, cfg.alpha_mapping));
  return row;
}

}  // namespace

DilemmaResult repro_dilemma(const TrainConfig& cfg, const Datasets& data) {
  auto pre = pretrain(cfg, data);
  DilemmaResult result{{}, pre.model, {}};
  result.rows.push_back(dilemma_row(cfg, pre.model, pre.model, Method::none, data));
  for (auto m : kFinetuneMethods) {
    auto ft = finetune(cfg, pre.model, m, data);
    result.rows.push_back(dilemma_row(cfg, pre.model, ft.model, m, data));
    result.finetuned.emplace(m, std::move(ft));
  }
  return result;
}

void write_dilemma_csv(const std::vector<DilemmaRow>& rows, std::ostream& out) {
  out << kDilemmaCsvHeader << '\n';
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << to_string(r.score) << ',' << format_number(r.fpr95) << ','
        << format_number(r.pretrained_fpr95) << ',' << format_number(r.auroc) << ',' << format_number(r.aupr) << ','
        << format_number(r.id_acc) << ',' << format_number(r.cov_acc) << ','
        << format_number(r.sem_train_softmax_entropy) << ',' << format_number(r.mean_du_sem) << ','
        << format_number(r.mean_total_sem) << '\n';
  }
}

}  // namespace dul
