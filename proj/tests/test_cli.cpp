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


#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef DUL_LAB_PATH
#error "DUL_LAB_PATH must point at the dul_lab executable"
#endif

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "dul_cli_test";

int run(const std::string& args, const std::string& env = "") {
  fs::create_directories(kWork);
  const std::string cmd = env + " \"" DUL_LAB_PATH "\" " + args + " >\"" + (kWork / "stdout.txt").string() +
                          "\" 2>\"" + (kWork / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small enough that the whole pipeline takes a second or two.
fs::path small_config() {
  fs::create_directories(kWork);
  const auto p = kWork / "small.ini";
  std::ofstream(p) << "[train]\npretrain_epochs = 10\nfinetune_epochs = 2\nbatch_id = 32\nbatch_ood = 64\n"
                      "[data]\nn_per_class = 60\nn_test_per_class = 60\nn_sem_train = 150\nn_sem_test = 150\n";
  return p;
}

std::string out_dir(const std::string& name) {
  const auto d = kWork / name;
  fs::remove_all(d);
  return d.string();
}

}  // namespace

TEST_CASE("usage errors exit with status 2") {
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("verify --no-such-flag") == 2);
  CHECK(slurp(kWork / "stderr.txt").find("Usage") != std::string::npos);
  CHECK(run("--config /nonexistent/dul.ini verify") == 2);
  CHECK(slurp(kWork / "stderr.txt").find("config file not found") != std::string::npos);

  const auto bad = kWork / "bad.ini";
  std::ofstream(bad) << "[train]\nunknown_key = 3\n";
  CHECK(run("--config " + bad.string() + " gen-data --out " + out_dir("bad")) == 2);
  CHECK(slurp(kWork / "stderr.txt").find("line 2") != std::string::npos);

  std::ofstream(bad) << "[train]\npretrain_epochs = 0\n";
  CHECK(run("--config " + bad.string() + " pretrain") == 2);

  CHECK(run("finetune --out " + out_dir("no_ckpt")) == 2);
  CHECK(slurp(kWork / "stderr.txt").find("checkpoint not found") != std::string::npos);
  CHECK(run("finetune --method none --out " + out_dir("none")) == 2);
  CHECK(run("eval --method sideways --out " + out_dir("sideways")) == 2);
}

TEST_CASE("help exits cleanly") { CHECK(run("--help") == 0); }

TEST_CASE("verify exit status follows violations") {
  CHECK(run("verify --mc-samples 20000 --fuzz-cases 2000 --out " + out_dir("verify_ok")) == 0);
  CHECK(slurp(kWork / "verify_ok" / "verify.csv").rfind("check,cases,lhs,rhs,passed\n", 0) == 0);
  CHECK(slurp(kWork / "stdout.txt").find("\n0 violation(s)") != std::string::npos);

  CHECK(run("verify --digamma-offset 1e-3 --mc-samples 20000 --fuzz-cases 2000 --out " + out_dir("verify_bad")) == 1);
  const auto text = slurp(kWork / "verify_bad" / "verify.txt");
  CHECK(text.find("FAIL digamma(1)") != std::string::npos);
  CHECK(text.find("offending input") != std::string::npos);
}

TEST_CASE("step-by-step pipeline") {
  const auto cfg = small_config().string();
  const auto out = out_dir("pipeline");
  const std::string common = "--config " + cfg + " --out " + out;
  CHECK(run("gen-data " + common) == 0);
  CHECK(fs::exists(fs::path(out) / "id_train.csv"));
  CHECK(fs::exists(fs::path(out) / "sem_test.csv"));
  CHECK(fs::exists(fs::path(out) / "cov_eps1.25.csv"));
  CHECK(run("pretrain " + common) == 0);
  CHECK(fs::exists(fs::path(out) / "pretrained.ckpt"));
  CHECK(run("finetune --method oe " + common) == 0);
  CHECK(fs::exists(fs::path(out) / "finetuned_oe.ckpt"));
  CHECK(run("eval --method oe " + common) == 0);
  CHECK(slurp(fs::path(out) / "eval_oe.csv").rfind("method,fpr95,auroc,aupr,id_acc,cov_acc,", 0) == 0);
  CHECK(run("sweep --method none " + common) == 0);
  CHECK(slurp(fs::path(out) / "sweep_none.csv").rfind("eps,noise_std,cov_acc,", 0) == 0);
  CHECK(run("eval --checkpoint " + (fs::path(out) / "pretrained.ckpt").string() + " --method none " + common) == 0);
}

TEST_CASE("output directory falls back to DUL_OUT") {
  const auto env_out = out_dir("from_env");
  CHECK(run("--config " + small_config().string() + " gen-data", "DUL_OUT=\"" + env_out + "\"") == 0);
  CHECK(fs::exists(fs::path(env_out) / "id_test.csv"));
}

TEST_CASE("repro-dilemma writes one row per method") {
  const auto out = out_dir("dilemma");
  CHECK(run("--config " + small_config().string() + " --seed 3 repro-dilemma --out " + out) == 0);
  std::istringstream csv(slurp(fs::path(out) / "dilemma.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line.find("fpr95") != std::string::npos);
  CHECK(line.find("cov_acc") != std::string::npos);
  std::string methods;
  while (std::getline(csv, line)) methods += line.substr(0, line.find(',')) + " ";
  CHECK(methods == "none oe energy dpn dul ");
  CHECK(slurp(fs::path(out) / "config.ini").find("seed = 3") != std::string::npos);
}
