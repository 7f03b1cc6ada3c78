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
#include <span>
#include <string_view>
#include <vector>

namespace dul {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Activation { relu, tanh };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

/// One affine map: out = W in + b, W is out x in.
struct DenseLayer {
  Matrix weight;
  std::vector<double> bias;

  bool operator==(const DenseLayer&) const = default;
};

/// Feed-forward classifier producing logits. The activation is applied between
/// layers, never after the last one.
class Mlp {
 public:
  /// Throws InputError when layer shapes do not chain or parameters are not finite.
  Mlp(std::vector<DenseLayer> layers, Activation activation);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  Activation activation() const { return activation_; }
  std::size_t input_dim() const { return layers_.front().weight.cols(); }
  std::size_t output_dim() const { return layers_.back().weight.rows(); }
  std::vector<std::size_t> layer_sizes() const;

  std::size_t parameter_count() const;
  /// Parameters in checkpoint order: per layer, W row-major then b.
  std::vector<double> flat_parameters() const;
  /// Same architecture, parameters replaced from a flat vector in checkpoint order.
  Mlp with_parameters(std::span<const double> flat) const;

  bool operator==(const Mlp&) const = default;

 private:
  std::vector<DenseLayer> layers_;
  Activation activation_;
};

/// Gradient of a scalar with respect to every Mlp parameter, same shapes.
struct ParamGrads {
  std::vector<DenseLayer> layers;

  static ParamGrads zeros_like(const Mlp& m);
  std::vector<double> flat() const;
  ParamGrads& operator+=(const ParamGrads& other);
  bool operator==(const ParamGrads&) const = default;
};

/// n x d inputs, labels present iff the rows are labeled ID data.
struct Batch {
  Matrix inputs;
  std::optional<std::vector<int>> labels;
};

/// Deterministic init: W ~ N(0, 1/fan_in) from Rng(seed, Stream::init), b = 0.
Mlp mlp_init(std::span<const std::size_t> layer_sizes, Activation activation, std::uint64_t seed);

/// Logits, n x K.
Matrix mlp_forward(const Mlp& m, const Matrix& inputs);
std::vector<double> mlp_forward(const Mlp& m, std::span<const double> x);

/// Intermediate values kept for the backward pass.
struct ForwardTrace {
  std::vector<Matrix> layer_inputs;  // input to layer i (post-activation of i-1)
  std::vector<Matrix> pre_activations;
  Matrix logits;
};

ForwardTrace mlp_forward_trace(const Mlp& m, const Matrix& inputs);

/// Reverse pass: given dL/dlogits for the traced batch, return dL/dtheta.
ParamGrads mlp_backward(const Mlp& m, const ForwardTrace& trace, const Matrix& logit_grads);

struct SgdResult {
  Mlp model;
  ParamGrads velocity;
};

/// v <- momentum v + (g + weight_decay theta);  theta <- theta - lr v.
SgdResult sgd_step(const Mlp& m, const ParamGrads& grads, const ParamGrads& velocity, double lr,
                   double momentum, double weight_decay = 0.0);

/// lr0 * 0.5 * (1 + cos(pi * epoch / total_epochs)).
double cosine_lr(int epoch, int total_epochs, double lr0);

/// Checkpoint text format:
///   dul-mlp 1
///   activation <relu|tanh>
///   sizes <d0> <d1> ... <dL>
///   <one parameter per line, shortest round-trip decimal, checkpoint order>
void save_checkpoint(const Mlp& m, const std::filesystem::path& path);
Mlp load_checkpoint(const std::filesystem::path& path);

}  // namespace dul
