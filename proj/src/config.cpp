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


#include "dul/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dul/errors.hpp"
#include "dul/metrics.hpp"

namespace dul {

Method parse_method(std::string_view name) {
  for (auto m : {Method::none, Method::oe, Method::energy, Method::dpn, Method::dul}) {
    if (to_string(m) == name) return m;
  }
  throw InputError("unknown method '" + std::string(name) + "'");
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::none: return "none";
    case Method::oe: return "oe";
    case Method::energy: return "energy";
    case Method::dpn: return "dpn";
    case Method::dul: return "dul";
  }
  return "?";
}

Schedule parse_schedule(std::string_view name) {
  if (name == "constant") return Schedule::constant;
  if (name == "cosine") return Schedule::cosine;
  throw InputError("unknown schedule '" + std::string(name) + "'");
}

std::string_view to_string(Schedule s) { return s == Schedule::constant ? "constant" : "cosine"; }

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw InputError("config: " + what);
  };
  require(arch.size() >= 2, "arch needs at least an input and an output size");
  for (auto s : arch) require(s > 0, "arch sizes must be positive");
  require(arch.front() == 2, "arch must start with input width 2");
  require(arch.back() == static_cast<std::size_t>(data.k), "arch output width must equal data.k");
  require(pretrain_epochs >= 1, "pretrain_epochs must be >= 1");
  require(finetune_epochs >= 1, "finetune_epochs must be >= 1");
  require(lr0 > 0.0 && std::isfinite(lr0), "lr0 must be > 0");
  require(finetune_lr0 > 0.0 && std::isfinite(finetune_lr0), "finetune_lr0 must be > 0");
  require(momentum >= 0.0 && momentum < 1.0, "momentum must be in [0, 1)");
  require(weight_decay >= 0.0 && std::isfinite(weight_decay), "weight_decay must be >= 0");
  require(batch_id >= 1, "batch_id must be >= 1");
  require(batch_ood >= 1, "batch_ood must be >= 1");

  require(data.k >= 2, "data.k must be >= 2");
  require(data.n_per_class >= 1 && data.n_test_per_class >= 1, "per-class counts must be >= 1");
  require(data.n_sem_train >= 1 && data.n_sem_test >= 1, "semantic counts must be >= 1");
  require(data.radius > 0.0 && data.sigma > 0.0, "radius and sigma must be > 0");
  require(data.sem_radius > 0.0 && data.ring_radius > 0.0, "semantic radii must be > 0");
  require(data.sem_sigma >= 0.0, "sem_sigma must be >= 0");
  require(data.ring_span > 0.0, "ring_span must be > 0");
  require(!data.eps_grid.empty(), "eps_grid must be nonempty");
  for (double e : data.eps_grid) require(e >= 0.0 && std::isfinite(e), "eps_grid entries must be >= 0");
  require(data.eps_scale > 0.0, "eps_scale must be > 0");

  require(oe.lambda >= 0.0, "oe.lambda must be >= 0");
  require(energy.lambda >= 0.0, "energy.lambda must be >= 0");
  require(dpn.target_alpha0 > 0.0, "dpn.target_alpha0 must be > 0");
  require(dpn.smoothing >= 0.0 && dpn.smoothing < 0.5, "dpn.smoothing must be in [0, 0.5)");
  require(dul.lambda >= 0.0 && dul.gamma >= 0.0, "dul.lambda and dul.gamma must be >= 0");
  require(dul.tau == 1 || dul.tau == 2, "dul.tau must be 1 or 2");
}

LossSpec TrainConfig::loss_spec(Method m) const {
  LossSpec s;
  s.alpha_mapping = alpha_mapping;
  switch (m) {
    case Method::none: throw InputError("method 'none' has no finetuning objective");
    case Method::oe:
      s.kind = LossKind::oe;
      s.lambda = oe.lambda;
      break;
    case Method::energy:
      s.kind = LossKind::energy_margin;
      s.lambda = energy.lambda;
      s.m_in = energy.m_in;
      s.m_out = energy.m_out;
      break;
    case Method::dpn:
      s.kind = LossKind::dpn;
      s.target_alpha0 = dpn.target_alpha0;
      s.smoothing = dpn.smoothing;
      break;
    case Method::dul:
      s.kind = LossKind::dul;
      s.lambda = dul.lambda;
      s.gamma = dul.gamma;
      s.m_in = dul.m_in;
      s.m_out = dul.m_out;
      s.tau = dul.tau;
      s.du_measure = dul.du_measure;
      s.h0_constant = dul.h0;
      break;
  }
  s.validate();
  return s;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view v, std::size_t line) {
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ParseError("expected a number, got '" + std::string(v) + "'", line);
  }
  return out;
}

template <class T>
std::vector<T> parse_list(std::string_view v, std::size_t line) {
  std::vector<T> out;
  while (true) {
    const auto comma = v.find(',');
    out.push_back(parse_number<T>(trim(v.substr(0, comma)), line));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

// Wraps an enum parser so its InputError carries the line.
template <class F>
auto parse_enum(F f, std::string_view v, std::size_t line) {
  try {
    return f(v);
  } catch (const InputError& e) {
    throw ParseError(e.what(), line);
  }
}

using Setter = std::function<void(TrainConfig&, std::string_view, std::size_t)>;
using Section = std::map<std::string, Setter, std::less<>>;
using Table = std::map<std::string, Section, std::less<>>;

template <class T>
Setter num(T TrainConfig::*field) {
  return [field](TrainConfig& c, std::string_view v, std::size_t l) { c.*field = parse_number<T>(v, l); };
}

template <class S, class T>
Setter num(S TrainConfig::*section, T S::*field) {
  return [section, field](TrainConfig& c, std::string_view v, std::size_t l) {
    (c.*section).*field = parse_number<T>(v, l);
  };
}

const Table& setters() {
  static const Table table = {
      {"model",
       {{"arch", [](TrainConfig& c, std::string_view v, std::size_t l) { c.arch = parse_list<std::size_t>(v, l); }},
        {"activation",
         [](TrainConfig& c, std::string_view v, std::size_t l) { c.activation = parse_enum(parse_activation, v, l); }},
        {"alpha_mapping", [](TrainConfig& c, std::string_view v, std::size_t l) {
           c.alpha_mapping = parse_enum(parse_alpha_mapping, v, l);
         }}}},
      {"train",
       {{"seed", num(&TrainConfig::seed)},
        {"pretrain_epochs", num(&TrainConfig::pretrain_epochs)},
        {"finetune_epochs", num(&TrainConfig::finetune_epochs)},
        {"lr0", num(&TrainConfig::lr0)},
        {"finetune_lr0", num(&TrainConfig::finetune_lr0)},
        {"momentum", num(&TrainConfig::momentum)},
        {"weight_decay", num(&TrainConfig::weight_decay)},
        {"schedule",
         [](TrainConfig& c, std::string_view v, std::size_t l) { c.schedule = parse_enum(parse_schedule, v, l); }},
        {"batch_id", num(&TrainConfig::batch_id)},
        {"batch_ood", num(&TrainConfig::batch_ood)},
        {"method",
         [](TrainConfig& c, std::string_view v, std::size_t l) { c.method = parse_enum(parse_method, v, l); }}}},
      {"data",
       {{"k", num(&TrainConfig::data, &DataConfig::k)},
        {"n_per_class", num(&TrainConfig::data, &DataConfig::n_per_class)},
        {"n_test_per_class", num(&TrainConfig::data, &DataConfig::n_test_per_class)},
        {"radius", num(&TrainConfig::data, &DataConfig::radius)},
        {"sigma", num(&TrainConfig::data, &DataConfig::sigma)},
        {"n_sem_train", num(&TrainConfig::data, &DataConfig::n_sem_train)},
        {"n_sem_test", num(&TrainConfig::data, &DataConfig::n_sem_test)},
        {"sem_radius", num(&TrainConfig::data, &DataConfig::sem_radius)},
        {"sem_sigma", num(&TrainConfig::data, &DataConfig::sem_sigma)},
        {"ring_radius", num(&TrainConfig::data, &DataConfig::ring_radius)},
        {"sem_test_offset", num(&TrainConfig::data, &DataConfig::sem_test_offset)},
        {"ring_start", num(&TrainConfig::data, &DataConfig::ring_start)},
        {"ring_span", num(&TrainConfig::data, &DataConfig::ring_span)},
        {"eps_grid",
         [](TrainConfig& c, std::string_view v, std::size_t l) { c.data.eps_grid = parse_list<double>(v, l); }},
        {"eps_scale", num(&TrainConfig::data, &DataConfig::eps_scale)}}},
      {"oe", {{"lambda", num(&TrainConfig::oe, &OeConfig::lambda)}}},
      {"energy",
       {{"lambda", num(&TrainConfig::energy, &EnergyConfig::lambda)},
        {"m_in", num(&TrainConfig::energy, &EnergyConfig::m_in)},
        {"m_out", num(&TrainConfig::energy, &EnergyConfig::m_out)}}},
      {"dpn",
       {{"target_alpha0", num(&TrainConfig::dpn, &DpnConfig::target_alpha0)},
        {"smoothing", num(&TrainConfig::dpn, &DpnConfig::smoothing)}}},
      {"dul",
       {{"lambda", num(&TrainConfig::dul, &DulConfig::lambda)},
        {"gamma", num(&TrainConfig::dul, &DulConfig::gamma)},
        {"m_in", num(&TrainConfig::dul, &DulConfig::m_in)},
        {"m_out", num(&TrainConfig::dul, &DulConfig::m_out)},
        {"tau", num(&TrainConfig::dul, &DulConfig::tau)},
        {"du_measure",
         [](TrainConfig& c, std::string_view v, std::size_t l) {
           c.dul.du_measure = parse_enum(parse_du_measure, v, l);
         }},
        {"h0", [](TrainConfig& c, std::string_view v, std::size_t l) {
           if (v == "none") {
             c.dul.h0.reset();
           } else {
             c.dul.h0 = parse_number<double>(v, l);
           }
         }}}},
  };
  return table;
}

}  // namespace

TrainConfig parse_config(std::string_view text) {
  TrainConfig cfg;
  const auto& table = setters();
  const Section* section = nullptr;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    const auto hash = line.find_first_of("#;");
    line = trim(line.substr(0, hash));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no);
      const auto name = trim(line.substr(1, line.size() - 2));
      const auto it = table.find(name);
      if (it == table.end()) throw ParseError("unknown section '" + std::string(name) + "'", line_no);
      section = &it->second;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    if (section == nullptr) throw ParseError("key outside of any section", line_no);
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = section->find(key);
    if (it == section->end()) throw ParseError("unknown key '" + std::string(key) + "'", line_no);
    if (value.empty()) throw ParseError("empty value for '" + std::string(key) + "'", line_no);
    it->second(cfg, value, line_no);
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const TrainConfig& c) {
  std::ostringstream o;
  auto list = [](const auto& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i > 0) s += ", ";
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(v[i])>>) {
        s += format_number(v[i]);
      } else {
        s += std::to_string(v[i]);
      }
    }
    return s;
  };
  const auto f = format_number;
  o << "[model]\n"
    << "arch = " << list(c.arch) << '\n'
    << "activation = " << to_string(c.activation) << '\n'
    << "alpha_mapping = " << to_string(c.alpha_mapping) << "\n\n"
    << "[train]\n"
    << "seed = " << c.seed << '\n'
    << "pretrain_epochs = " << c.pretrain_epochs << '\n'
    << "finetune_epochs = " << c.finetune_epochs << '\n'
    << "lr0 = " << f(c.lr0) << '\n'
    << "finetune_lr0 = " << f(c.finetune_lr0) << '\n'
    << "momentum = " << f(c.momentum) << '\n'
    << "weight_decay = " << f(c.weight_decay) << '\n'
    << "schedule = " << to_string(c.schedule) << '\n'
    << "batch_id = " << c.batch_id << '\n'
    << "batch_ood = " << c.batch_ood << '\n'
    << "method = " << to_string(c.method) << "\n\n"
    << "[data]\n"
    << "k = " << c.data.k << '\n'
    << "n_per_class = " << c.data.n_per_class << '\n'
    << "n_test_per_class = " << c.data.n_test_per_class << '\n'
    << "radius = " << f(c.data.radius) << '\n'
    << "sigma = " << f(c.data.sigma) << '\n'
    << "n_sem_train = " << c.data.n_sem_train << '\n'
    << "n_sem_test = " << c.data.n_sem_test << '\n'
    << "sem_radius = " << f(c.data.sem_radius) << '\n'
    << "sem_sigma = " << f(c.data.sem_sigma) << '\n'
    << "ring_radius = " << f(c.data.ring_radius) << '\n'
    << "sem_test_offset = " << f(c.data.sem_test_offset) << '\n'
    << "ring_start = " << f(c.data.ring_start) << '\n'
    << "ring_span = " << f(c.data.ring_span) << '\n'
    << "eps_grid = " << list(c.data.eps_grid) << '\n'
    << "eps_scale = " << f(c.data.eps_scale) << "\n\n"
    << "[oe]\n"
    << "lambda = " << f(c.oe.lambda) << "\n\n"
    << "[energy]\n"
    << "lambda = " << f(c.energy.lambda) << '\n'
    << "m_in = " << f(c.energy.m_in) << '\n'
    << "m_out = " << f(c.energy.m_out) << "\n\n"
    << "[dpn]\n"
    << "target_alpha0 = " << f(c.dpn.target_alpha0) << '\n'
    << "smoothing = " << f(c.dpn.smoothing) << "\n\n"
    << "[dul]\n"
    << "lambda = " << f(c.dul.lambda) << '\n'
    << "gamma = " << f(c.dul.gamma) << '\n'
    << "m_in = " << f(c.dul.m_in) << '\n'
    << "m_out = " << f(c.dul.m_out) << '\n'
    << "tau = " << c.dul.tau << '\n'
    << "du_measure = " << to_string(c.dul.du_measure) << '\n'
    << "h0 = " << (c.dul.h0 ? f(*c.dul.h0) : std::string("none")) << '\n';
  return o.str();
}

}  // namespace dul
