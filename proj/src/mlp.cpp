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


#include "dul/mlp.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "dul/errors.hpp"
#include "dul/rng.hpp"

namespace dul {

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw InputError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Mlp::Mlp(std::vector<DenseLayer> layers, Activation activation)
    : layers_(std::move(layers)), activation_(activation) {
  if (layers_.empty()) throw InputError("Mlp: at least one layer required");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weight.rows() == 0 || l.weight.cols() == 0) throw InputError("Mlp: empty layer");
    if (l.bias.size() != l.weight.rows()) throw InputError("Mlp: bias length != layer width");
    if (i > 0 && l.weight.cols() != layers_[i - 1].weight.rows()) {
      throw InputError("Mlp: layer " + std::to_string(i) + " input width does not chain");
    }
    for (double w : l.weight.data()) {
      if (!std::isfinite(w)) throw InputError("Mlp: non-finite weight");
    }
    for (double b : l.bias) {
      if (!std::isfinite(b)) throw InputError("Mlp: non-finite bias");
    }
  }
}

std::vector<std::size_t> Mlp::layer_sizes() const {
  std::vector<std::size_t> sizes{input_dim()};
  for (const auto& l : layers_) sizes.push_back(l.weight.rows());
  return sizes;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.data().size() + l.bias.size();
  return n;
}

namespace {

std::vector<double> flatten(const std::vector<DenseLayer>& layers) {
  std::vector<double> flat;
  for (const auto& l : layers) {
    flat.insert(flat.end(), l.weight.data().begin(), l.weight.data().end());
    flat.insert(flat.end(), l.bias.begin(), l.bias.end());
  }
  return flat;
}

}  // namespace

std::vector<double> Mlp::flat_parameters() const { return flatten(layers_); }

Mlp Mlp::with_parameters(std::span<const double> flat) const {
  if (flat.size() != parameter_count()) throw InputError("Mlp::with_parameters: size mismatch");
  std::vector<DenseLayer> layers = layers_;
  std::size_t pos = 0;
  for (auto& l : layers) {
    for (double& w : l.weight.data()) w = flat[pos++];
    for (double& b : l.bias) b = flat[pos++];
  }
  return Mlp(std::move(layers), activation_);
}

ParamGrads ParamGrads::zeros_like(const Mlp& m) {
  ParamGrads g;
  for (const auto& l : m.layers()) {
    g.layers.push_back({Matrix(l.weight.rows(), l.weight.cols()), std::vector<double>(l.bias.size())});
  }
  return g;
}

std::vector<double> ParamGrads::flat() const { return flatten(layers); }

ParamGrads& ParamGrads::operator+=(const ParamGrads& other) {
  if (other.layers.size() != layers.size()) throw InputError("ParamGrads: shape mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto dst = layers[i].weight.data();
    auto src = other.layers[i].weight.data();
    if (dst.size() != src.size()) throw InputError("ParamGrads: shape mismatch");
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    for (std::size_t j = 0; j < layers[i].bias.size(); ++j) layers[i].bias[j] += other.layers[i].bias[j];
  }
  return *this;
}

Mlp mlp_init(std::span<const std::size_t> layer_sizes, Activation activation, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw InputError("mlp_init: need input and output sizes");
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw InputError("mlp_init: layer sizes must be >= 1");
  }
  Rng rng(seed, Stream::init);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    const std::size_t in = layer_sizes[i];
    const std::size_t out = layer_sizes[i + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    DenseLayer l{Matrix(out, in), std::vector<double>(out, 0.0)};
    for (double& w : l.weight.data()) w = scale * rng.normal();
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers), activation);
}

namespace {

double activate(Activation a, double z) { return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z); }

// d activation / dz expressed through z and the activation output y.
double activate_grad(Activation a, double z, double y) {
  return a == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0 - y * y;
}

Matrix affine(const DenseLayer& l, const Matrix& in) {
  const std::size_t n = in.rows();
  const std::size_t out = l.weight.rows();
  const std::size_t din = l.weight.cols();
  Matrix z(n, out);
  for (std::size_t r = 0; r < n; ++r) {
    const auto x = in.row(r);
    auto zr = z.row(r);
    for (std::size_t o = 0; o < out; ++o) {
      const auto w = l.weight.row(o);
      double acc = l.bias[o];
      for (std::size_t j = 0; j < din; ++j) acc += w[j] * x[j];
      zr[o] = acc;
    }
  }
  return z;
}

}  // namespace

ForwardTrace mlp_forward_trace(const Mlp& m, const Matrix& inputs) {
  if (inputs.cols() != m.input_dim()) {
    throw InputError("mlp_forward: input width " + std::to_string(inputs.cols()) +
                     " does not match model input " + std::to_string(m.input_dim()));
  }
  ForwardTrace t;
  Matrix current = inputs;
  const auto& layers = m.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Matrix z = affine(layers[i], current);
    t.layer_inputs.push_back(std::move(current));
    if (i + 1 == layers.size()) {
      t.logits = z;
      t.pre_activations.push_back(std::move(z));
      break;
    }
    Matrix y = z;
    for (double& v : y.data()) v = activate(m.activation(), v);
    t.pre_activations.push_back(std::move(z));
    current = std::move(y);
  }
  return t;
}

Matrix mlp_forward(const Mlp& m, const Matrix& inputs) { return mlp_forward_trace(m, inputs).logits; }

std::vector<double> mlp_forward(const Mlp& m, std::span<const double> x) {
  Matrix in(1, x.size());
  std::copy(x.begin(), x.end(), in.data().begin());
  const Matrix out = mlp_forward(m, in);
  return {out.data().begin(), out.data().end()};
}

ParamGrads mlp_backward(const Mlp& m, const ForwardTrace& trace, const Matrix& logit_grads) {
  const auto& layers = m.layers();
  if (logit_grads.rows() != trace.logits.rows() || logit_grads.cols() != trace.logits.cols()) {
    throw InputError("mlp_backward: logit gradient shape mismatch");
  }
  ParamGrads g = ParamGrads::zeros_like(m);
  Matrix delta = logit_grads;  // dL/dz for the current layer
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& l = layers[li];
    const Matrix& in = trace.layer_inputs[li];
    auto& gl = g.layers[li];
    const std::size_t n = delta.rows();
    const std::size_t out = l.weight.rows();
    const std::size_t din = l.weight.cols();
    for (std::size_t r = 0; r < n; ++r) {
      const auto d = delta.row(r);
      const auto x = in.row(r);
      for (std::size_t o = 0; o < out; ++o) {
        if (d[o] == 0.0) continue;
        auto gw = gl.weight.row(o);
        for (std::size_t j = 0; j < din; ++j) gw[j] += d[o] * x[j];
        gl.bias[o] += d[o];
      }
    }
    if (li == 0) break;
    const Matrix& z_prev = trace.pre_activations[li - 1];
    Matrix next(n, din);
    for (std::size_t r = 0; r < n; ++r) {
      const auto d = delta.row(r);
      auto nr = next.row(r);
      for (std::size_t o = 0; o < out; ++o) {
        if (d[o] == 0.0) continue;
        const auto w = l.weight.row(o);
        for (std::size_t j = 0; j < din; ++j) nr[j] += d[o] * w[j];
      }
      for (std::size_t j = 0; j < din; ++j) {
        nr[j] *= activate_grad(m.activation(), z_prev(r, j), in(r, j));
      }
    }
    delta = std::move(next);
  }
  return g;
}

SgdResult sgd_step(const Mlp& m, const ParamGrads& grads, const ParamGrads& velocity, double lr,
                   double momentum, double weight_decay) {
  if (!(lr > 0.0)) throw InputError("sgd_step: lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InputError("sgd_step: momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw InputError("sgd_step: weight_decay must be >= 0");
  const auto g = grads.flat();
  auto v = velocity.flat();
  auto theta = m.flat_parameters();
  if (g.size() != theta.size() || v.size() != theta.size()) {
    throw InputError("sgd_step: gradient shape does not match model");
  }
  for (std::size_t i = 0; i < theta.size(); ++i) {
    v[i] = momentum * v[i] + (g[i] + weight_decay * theta[i]);
    theta[i] -= lr * v[i];
  }
  SgdResult result{m.with_parameters(theta), ParamGrads::zeros_like(m)};
  std::size_t pos = 0;
  for (auto& l : result.velocity.layers) {
    for (double& w : l.weight.data()) w = v[pos++];
    for (double& b : l.bias) b = v[pos++];
  }
  return result;
}

double cosine_lr(int epoch, int total_epochs, double lr0) {
  if (total_epochs < 1 || epoch < 0 || epoch > total_epochs) {
    throw InputError("cosine_lr: epoch out of range");
  }
  if (!(lr0 > 0.0)) throw InputError("cosine_lr: lr0 must be positive");
  if (epoch == total_epochs) return 0.0;
  const double frac = static_cast<double>(epoch) / static_cast<double>(total_epochs);
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

namespace {

constexpr std::string_view kCheckpointMagic = "dul-mlp";
constexpr int kCheckpointVersion = 1;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void save_checkpoint(const Mlp& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open checkpoint for writing: " + path.string());
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "activation " << to_string(m.activation()) << '\n';
  out << "sizes";
  for (std::size_t s : m.layer_sizes()) out << ' ' << s;
  out << '\n';
  for (double v : m.flat_parameters()) out << format_double(v) << '\n';
  if (!out) throw InputError("failed writing checkpoint: " + path.string());
}

Mlp load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) throw ParseError("unexpected end of checkpoint", line_no + 1);
    ++line_no;
    return line;
  };

  {
    std::istringstream hdr(next_line());
    std::string magic;
    int version = 0;
    if (!(hdr >> magic >> version) || magic != kCheckpointMagic) throw ParseError("not a dul-mlp checkpoint", line_no);
    if (version != kCheckpointVersion) throw ParseError("unsupported checkpoint version", line_no);
  }
  Activation act;
  {
    std::istringstream s(next_line());
    std::string key, name;
    if (!(s >> key >> name) || key != "activation") throw ParseError("expected 'activation'", line_no);
    act = parse_activation(name);
  }
  std::vector<std::size_t> sizes;
  {
    std::istringstream s(next_line());
    std::string key;
    if (!(s >> key) || key != "sizes") throw ParseError("expected 'sizes'", line_no);
    std::size_t v;
    while (s >> v) sizes.push_back(v);
    if (sizes.size() < 2) throw ParseError("need at least two layer sizes", line_no);
  }
  // Placeholder weights fix the shape; values are overwritten below.
  const Mlp shape = mlp_init(sizes, act, 0);
  std::vector<double> flat(shape.parameter_count());
  for (double& v : flat) {
    const std::string& l = next_line();
    const auto res = std::from_chars(l.data(), l.data() + l.size(), v);
    if (res.ec != std::errc() || res.ptr != l.data() + l.size()) throw ParseError("bad parameter value", line_no);
  }
  if (std::getline(in, line) && !line.empty()) throw ParseError("trailing data in checkpoint", line_no + 1);
  return shape.with_parameters(flat);
}

}  // namespace dul
