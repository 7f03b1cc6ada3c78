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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dul/dirichlet.hpp"
#include "dul/losses.hpp"
#include "dul/mlp.hpp"

namespace dul {

/// Finetuning objective. `none` means the pretrained model is used as is.
enum class Method { none, oe, energy, dpn, dul };

Method parse_method(std::string_view name);
std::string_view to_string(Method m);
inline constexpr Method kFinetuneMethods[] = {Method::oe, Method::energy, Method::dpn, Method::dul};

enum class Schedule { constant, cosine };

Schedule parse_schedule(std::string_view name);
std::string_view to_string(Schedule s);

struct DataConfig {
  int k = 3;
  int n_per_class = 500;
  int n_test_per_class = 500;
  double radius = 4.0;
  double sigma = 0.5;
  int n_sem_train = 1500;
  int n_sem_test = 1500;
  double sem_radius = 8.0;
  double sem_sigma = 1.0;
  double ring_radius = 12.0;
  /// Test-split angles in units of the class spacing; see SemanticGeometry.
  double sem_test_offset = 0.25;
  double ring_start = 0.0;
  double ring_span = 1.0;
  std::vector<double> eps_grid{0.0, 0.25, 0.5, 0.75, 1.0, 1.25};
  /// Covariate noise std for a grid value eps is eps * eps_scale * sigma.
  double eps_scale = 6.0;

  double noise_std(double eps) const { return eps * eps_scale * sigma; }
};

struct OeConfig {
  double lambda = 5.0;
};

struct EnergyConfig {
  double lambda = 0.5;
  double m_in = -10.0;
  double m_out = -1.0;
};

struct DpnConfig {
  double target_alpha0 = 15.0;
  double smoothing = 0.01;
};

struct DulConfig {
  double lambda = 0.3;
  double gamma = 2.0;
  /// Accepted for parity with published settings; the objective has no ID margin.
  double m_in = 10.0;
  double m_out = 30.0;
  int tau = 1;
  DuMeasure du_measure = DuMeasure::diff_entropy;
  std::optional<double> h0;
};

/// Every knob of a run. Parsed from a flat INI-style file:
///
///   [model]  arch, activation, alpha_mapping
///   [train]  seed, pretrain_epochs, finetune_epochs, lr0, finetune_lr0, momentum,
///            weight_decay, schedule, batch_id, batch_ood, method
///   [data]   k, n_per_class, n_test_per_class, radius, sigma, n_sem_train,
///            n_sem_test, sem_radius, sem_sigma, ring_radius, sem_test_offset, ring_start,
///            ring_span, eps_grid, eps_scale
///   [oe]     lambda
///   [energy] lambda, m_in, m_out
///   [dpn]    target_alpha0, smoothing
///   [dul]    lambda, gamma, m_in, m_out, tau, du_measure, h0 (a number or "none")
///
/// Lists are comma separated. '#' and ';' start comments. Unknown sections or
/// keys are errors.
struct TrainConfig {
  std::vector<std::size_t> arch{2, 64, 64, 3};
  Activation activation = Activation::tanh;
  AlphaMapping alpha_mapping = AlphaMapping::relu_plus_one;

  std::uint64_t seed = 1;
  int pretrain_epochs = 200;
  int finetune_epochs = 20;
  double lr0 = 0.1;
  double finetune_lr0 = 0.01;
  double momentum = 0.9;
  /// L2 penalty folded into the SGD gradient, applied to every parameter.
  double weight_decay = 5e-4;
  Schedule schedule = Schedule::cosine;
  int batch_id = 128;
  int batch_ood = 256;
  Method method = Method::dul;

  DataConfig data;
  OeConfig oe;
  EnergyConfig energy;
  DpnConfig dpn;
  DulConfig dul;

  /// Throws InputError on any violated constraint.
  void validate() const;
  /// Objective used to finetune with `m`. Throws InputError for Method::none.
  LossSpec loss_spec(Method m) const;
};

/// Throws ParseError (with line) on syntax or unknown keys, InputError on bad values.
TrainConfig parse_config(std::string_view text);
TrainConfig load_config(const std::filesystem::path& path);
/// Serialized form accepted by parse_config; round-trips every field.
std::string format_config(const TrainConfig& cfg);

}  // namespace dul
