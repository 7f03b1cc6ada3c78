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


// dul_lab: command-line driver for data generation, training, evaluation,
// noise sweeps, verification and the detection-versus-generalization table.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "dul/config.hpp"
#include "dul/errors.hpp"
#include "dul/metrics.hpp"
#include "dul/mlp.hpp"
#include "dul/runner.hpp"
#include "dul/synthdata.hpp"
#include "dul/verify.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

dul::TrainConfig resolve_config(const Common& c) {
  dul::TrainConfig cfg;
  if (!c.config.empty()) {
    if (!fs::exists(c.config)) throw UsageError("config file not found: " + c.config);
    cfg = dul::load_config(c.config);
  }
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

fs::path resolve_out(const Common& c) {
  fs::path out = c.out;
  if (out.empty()) {
    const char* env = std::getenv("DUL_OUT");
    out = env != nullptr && *env != '\0' ? fs::path(env) : fs::path("dul_out");
  }
  fs::create_directories(out);
  return out;
}

// Writes via a string buffer so a failed write never leaves a partial file behind.
template <class F>
void write_file(const fs::path& path, F&& body) {
  std::ostringstream ss;
  body(ss);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << ss.str();
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

fs::path model_path(const fs::path& out, dul::Method m) {
  return m == dul::Method::none ? out / "pretrained.ckpt" : out / ("finetuned_" + std::string(to_string(m)) + ".ckpt");
}

dul::Mlp load_model(const std::string& explicit_path, const fs::path& fallback) {
  const fs::path p = explicit_path.empty() ? fallback : fs::path(explicit_path);
  if (!fs::exists(p)) throw UsageError("checkpoint not found: " + p.string() + " (run pretrain/finetune first)");
  return dul::load_checkpoint(p);
}

int gen_data(const Common& c) {
  const auto cfg = resolve_config(c);
  const auto out = resolve_out(c);
  const auto data = dul::make_datasets(cfg);
  dul::write_dataset_csv(data.id_train, out / "id_train.csv");
  dul::write_dataset_csv(data.id_test, out / "id_test.csv");
  dul::write_dataset_csv(data.sem_train, out / "sem_train.csv");
  dul::write_dataset_csv(data.sem_test, out / "sem_test.csv");
  for (const auto& cov : data.cov) {
    dul::write_dataset_csv(cov, out / ("cov_eps" + dul::format_number(cov.noise_eps) + ".csv"));
  }
  std::cout << "wrote " << 4 + data.cov.size() << " datasets to " << out.string() << '\n';
  return kExitOk;
}

int pretrain_cmd(const Common& c) {
  const auto cfg = resolve_config(c);
  const auto out = resolve_out(c);
  const auto data = dul::make_datasets(cfg);
  const auto res = dul::pretrain(cfg, data);
  dul::save_checkpoint(res.model, model_path(out, dul::Method::none));
  write_file(out / "pretrain_trace.csv", [&](std::ostream& o) { dul::write_trace_csv(res.trace, o); });
  std::cout << "pretrained: final loss " << dul::format_number(res.trace.back().loss) << ", ID test accuracy "
            << dul::format_number(dul::accuracy(res.model, data.id_test)) << '\n';
  return kExitOk;
}

int finetune_cmd(const Common& c, const std::string& method_name, const std::string& checkpoint) {
  auto cfg = resolve_config(c);
  if (!method_name.empty()) cfg.method = dul::parse_method(method_name);
  if (cfg.method == dul::Method::none) throw UsageError("finetune needs a method other than 'none'");
  const auto out = resolve_out(c);
  const auto pretrained = load_model(checkpoint, model_path(out, dul::Method::none));
  const auto data = dul::make_datasets(cfg);
  const auto res = dul::finetune(cfg, pretrained, cfg.method, data);
  dul::save_checkpoint(res.model, model_path(out, cfg.method));
  write_file(out / ("finetune_" + std::string(to_string(cfg.method)) + "_trace.csv"),
             [&](std::ostream& o) { dul::write_trace_csv(res.trace, o); });
  std::cout << "finetuned (" << to_string(cfg.method) << "): final loss " << dul::format_number(res.trace.back().loss)
            << '\n';
  return kExitOk;
}

int eval_cmd(const Common& c, const std::string& method_name, const std::string& checkpoint) {
  auto cfg = resolve_config(c);
  if (!method_name.empty()) cfg.method = dul::parse_method(method_name);
  const auto out = resolve_out(c);
  const auto model = load_model(checkpoint, model_path(out, cfg.method));
  const auto data = dul::make_datasets(cfg);
  const auto report = dul::evaluate(cfg, model, cfg.method, data);
  write_file(out / ("eval_" + std::string(to_string(cfg.method)) + ".csv"),
             [&](std::ostream& o) { dul::write_eval_csv(report, o); });
  dul::write_eval_csv(report, std::cout);
  return kExitOk;
}

int sweep_cmd(const Common& c, const std::string& method_name, const std::string& checkpoint) {
  auto cfg = resolve_config(c);
  if (!method_name.empty()) cfg.method = dul::parse_method(method_name);
  const auto out = resolve_out(c);
  const auto model = load_model(checkpoint, model_path(out, cfg.method));
  const auto data = dul::make_datasets(cfg);
  const auto rows = dul::noise_sweep(cfg, model, cfg.method, data);
  write_file(out / ("sweep_" + std::string(to_string(cfg.method)) + ".csv"),
             [&](std::ostream& o) { dul::write_sweep_csv(rows, o); });
  dul::write_sweep_csv(rows, std::cout);
  return kExitOk;
}

int verify_cmd(const Common& c, const dul::VerifyOptions& base) {
  const auto cfg = resolve_config(c);
  const auto out = resolve_out(c);
  auto opt = base;
  opt.seed = cfg.seed;
  const auto report = dul::verify(cfg, opt);
  write_file(out / "verify.txt", [&](std::ostream& o) { dul::write_verify_text(report, o); });
  write_file(out / "verify.csv", [&](std::ostream& o) { dul::write_verify_csv(report, o); });
  dul::write_verify_text(report, std::cout);
  return report.ok() ? kExitOk : kExitFailure;
}

int dilemma_cmd(const Common& c) {
  const auto cfg = resolve_config(c);
  const auto out = resolve_out(c);
  const auto data = dul::make_datasets(cfg);
  const auto res = dul::repro_dilemma(cfg, data);
  write_file(out / "config.ini", [&](std::ostream& o) { o << dul::format_config(cfg); });
  dul::save_checkpoint(res.pretrained, model_path(out, dul::Method::none));
  write_file(out / "sweep_none.csv",
             [&](std::ostream& o) { dul::write_sweep_csv(dul::noise_sweep(cfg, res.pretrained, dul::Method::none, data), o); });
  for (const auto& [m, ft] : res.finetuned) {
    const std::string name(to_string(m));
    dul::save_checkpoint(ft.model, model_path(out, m));
    write_file(out / ("finetune_" + name + "_trace.csv"), [&](std::ostream& o) { dul::write_trace_csv(ft.trace, o); });
    write_file(out / ("sweep_" + name + ".csv"),
               [&](std::ostream& o) { dul::write_sweep_csv(dul::noise_sweep(cfg, ft.model, m, data), o); });
  }
  write_file(out / "dilemma.csv", [&](std::ostream& o) { dul::write_dilemma_csv(res.rows, o); });
  dul::write_dilemma_csv(res.rows, std::cout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dul_lab: decoupled uncertainty learning on a synthetic 2-D suite"};
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  app.add_option("--config", common.config, "Config file (INI-style); defaults apply when omitted");
  app.add_option("--seed", common.seed, "Run seed, overrides [train] seed");
  app.add_option("--out", common.out, "Output directory (default: $DUL_OUT, else ./dul_out)");

  std::string method;
  std::string checkpoint;
  dul::VerifyOptions vopt;

  auto* gen = app.add_subcommand("gen-data", "Write every dataset of the run as CSV");
  auto* pre = app.add_subcommand("pretrain", "CE-only training on ID data");
  auto* fin = app.add_subcommand("finetune", "Finetune the pretrained checkpoint with an OOD objective");
  auto* ev = app.add_subcommand("eval", "Accuracy, uncertainty and detection metrics for a checkpoint");
  auto* sw = app.add_subcommand("sweep", "Accuracy and uncertainty across the covariate-noise grid");
  auto* ver = app.add_subcommand("verify", "Run the oracle and inequality suite; exit 1 on any violation");
  auto* dil = app.add_subcommand("repro-dilemma", "Pretrain, finetune every method, emit the comparison table");

  for (auto* sub : {fin, ev, sw}) {
    sub->add_option("--method", method, "none, oe, energy, dpn or dul (default: [train] method)");
    sub->add_option("--checkpoint", checkpoint, "Checkpoint to read (default: inside --out)");
  }
  ver->add_option("--digamma-offset", vopt.digamma_offset, "Fault injection: shift digamma by this amount");
  ver->add_option("--mc-samples", vopt.mc_samples, "Monte-Carlo samples per Dirichlet")->check(CLI::PositiveNumber);
  ver->add_option("--fuzz-cases", vopt.fuzz_cases, "Fuzzed inputs per inequality")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return gen_data(common);
    if (pre->parsed()) return pretrain_cmd(common);
    if (fin->parsed()) return finetune_cmd(common, method, checkpoint);
    if (ev->parsed()) return eval_cmd(common, method, checkpoint);
    if (sw->parsed()) return sweep_cmd(common, method, checkpoint);
    if (ver->parsed()) return verify_cmd(common, vopt);
    if (dil->parsed()) return dilemma_cmd(common);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const dul::ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const dul::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
