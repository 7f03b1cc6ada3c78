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


#include "dul/synthdata.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>

#include "dul/errors.hpp"
#include "dul/rng.hpp"

namespace dul {

DistTag parse_dist_tag(std::string_view name) {
  if (name == "ID") return DistTag::id;
  if (name == "COV") return DistTag::cov;
  if (name == "SEM_TRAIN") return DistTag::sem_train;
  if (name == "SEM_TEST") return DistTag::sem_test;
  throw InputError("unknown dataset tag '" + std::string(name) + "'");
}

std::string_view to_string(DistTag tag) {
  switch (tag) {
    case DistTag::id: return "ID";
    case DistTag::cov: return "COV";
    case DistTag::sem_train: return "SEM_TRAIN";
    case DistTag::sem_test: return "SEM_TEST";
  }
  return "?";
}

namespace {

bool is_labeled_tag(DistTag t) { return t == DistTag::id || t == DistTag::cov; }

}  // namespace

void LabeledDataset::validate() const {
  if (points.empty()) throw InputError("dataset is empty");
  if (is_labeled_tag(tag)) {
    if (!labels) throw InputError(std::string(to_string(tag)) + " dataset must be labeled");
    if (labels->size() != points.size()) throw InputError("label count does not match point count");
    for (int y : *labels) {
      if (y < 0) throw InputError("negative class label in labeled dataset");
    }
  } else if (labels) {
    throw InputError("semantic OOD datasets carry no class labels");
  }
  if (!(noise_eps >= 0.0)) throw InputError("noise_eps must be >= 0");
}

Matrix LabeledDataset::inputs() const {
  Matrix m(points.size(), 2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    m(i, 0) = points[i][0];
    m(i, 1) = points[i][1];
  }
  return m;
}

Batch LabeledDataset::batch() const { return Batch{inputs(), labels}; }

LabeledDataset make_id_blobs(int k, int n_per_class, double radius, double sigma, std::uint64_t seed) {
  if (k < 2) throw InputError("make_id_blobs: K must be >= 2");
  if (n_per_class < 1) throw InputError("make_id_blobs: n_per_class must be >= 1");
  if (!(sigma >= 0.0)) throw InputError("make_id_blobs: sigma must be >= 0");
  Rng rng(seed, Stream::data_id);
  LabeledDataset d;
  d.tag = DistTag::id;
  d.labels.emplace();
  for (int c = 0; c < k; ++c) {
    const double angle = 2.0 * std::numbers::pi * c / k;
    const Point2 center{radius * std::cos(angle), radius * std::sin(angle)};
    for (int i = 0; i < n_per_class; ++i) {
      const double dx = rng.normal();
      const double dy = rng.normal();
      d.points.push_back({center[0] + sigma * dx, center[1] + sigma * dy});
      d.labels->push_back(c);
    }
  }
  return d;
}

LabeledDataset perturb_covariate(const LabeledDataset& d, double eps, std::uint64_t seed) {
  if (d.tag != DistTag::id) throw InputError("perturb_covariate: input must be an ID dataset");
  if (!(eps >= 0.0)) throw InputError("perturb_covariate: eps must be >= 0");
  Rng rng(seed, Stream::data_cov);
  LabeledDataset out = d;
  out.tag = DistTag::cov;
  out.noise_eps = eps;
  for (auto& p : out.points) {
    const double dx = rng.normal();
    const double dy = rng.normal();
    p[0] += eps * dx;
    p[1] += eps * dy;
  }
  return out;
}

std::vector<Point2> semantic_centers(SemanticSplit split, const SemanticGeometry& g) {
  if (g.k < 2) throw InputError("semantic geometry: K must be >= 2");
  const double spacing = 2.0 * std::numbers::pi / g.k;
  const double offset = spacing * (split == SemanticSplit::train ? 0.5 : g.test_offset);
  std::vector<Point2> centers;
  for (int c = 0; c < g.k; ++c) {
    const double angle = spacing * c + offset;
    centers.push_back({g.radius * std::cos(angle), g.radius * std::sin(angle)});
  }
  return centers;
}

double min_split_center_distance(const SemanticGeometry& g) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& a : semantic_centers(SemanticSplit::train, g)) {
    for (const auto& b : semantic_centers(SemanticSplit::test, g)) {
      best = std::min(best, std::hypot(a[0] - b[0], a[1] - b[1]));
    }
  }
  return best;
}

LabeledDataset make_semantic_ood(SemanticSplit split, int n, std::uint64_t seed, const SemanticGeometry& g) {
  if (n < 1) throw InputError("make_semantic_ood: n must be >= 1");
  if (!(g.ring_span > 0.0)) throw InputError("make_semantic_ood: ring_span must be > 0");
  const auto centers = semantic_centers(split, g);
  Rng rng(seed, split == SemanticSplit::train ? Stream::data_sem_train : Stream::data_sem_test);
  const std::size_t components = centers.size() + (split == SemanticSplit::test ? 1 : 0);
  LabeledDataset d;
  d.tag = split == SemanticSplit::train ? DistTag::sem_train : DistTag::sem_test;
  for (int i = 0; i < n; ++i) {
    const std::size_t c = static_cast<std::size_t>(i) % components;
    if (c < centers.size()) {
      const double dx = rng.normal();
      const double dy = rng.normal();
      d.points.push_back({centers[c][0] + g.sigma * dx, centers[c][1] + g.sigma * dy});
    } else {
      const double spacing = 2.0 * std::numbers::pi / g.k;
      const double angle = spacing * (g.ring_start + g.ring_span * rng.uniform());
      const double r = g.ring_radius + g.sigma * rng.normal();
      d.points.push_back({r * std::cos(angle), r * std::sin(angle)});
    }
  }
  return d;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(',', start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
  T v{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError(std::string("bad ") + what + " '" + std::string(field) + "'", line);
  }
  return v;
}

}  // namespace

void write_dataset_csv(const LabeledDataset& d, const std::filesystem::path& path) {
  d.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open for writing: " + path.string());
  out << "x1,x2,label,tag\n";
  const auto tag = to_string(d.tag);
  for (std::size_t i = 0; i < d.size(); ++i) {
    out << format_double(d.points[i][0]) << ',' << format_double(d.points[i][1]) << ','
        << (d.labels ? (*d.labels)[i] : -1) << ',' << tag << '\n';
  }
  if (!out) throw InputError("failed writing " + path.string());
}

LabeledDataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open dataset: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty file, expected header", 1);
  ++line_no;
  if (line != "x1,x2,label,tag") throw ParseError("expected header 'x1,x2,label,tag'", line_no);

  LabeledDataset d;
  std::optional<DistTag> tag;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != 4) {
      throw ParseError("expected 4 columns, got " + std::to_string(fields.size()), line_no);
    }
    const double x1 = parse_number<double>(fields[0], line_no, "x1");
    const double x2 = parse_number<double>(fields[1], line_no, "x2");
    const int label = parse_number<int>(fields[2], line_no, "label");
    DistTag row_tag;
    try {
      row_tag = parse_dist_tag(fields[3]);
    } catch (const InputError& e) {
      throw ParseError(e.what(), line_no);
    }
    if (tag && *tag != row_tag) throw ParseError("mixed tags in one dataset", line_no);
    tag = row_tag;
    if (is_labeled_tag(row_tag) ? label < 0 : label != -1) {
      throw ParseError("label " + std::to_string(label) + " not valid for tag " +
                           std::string(to_string(row_tag)),
                       line_no);
    }
    d.points.push_back({x1, x2});
    labels.push_back(label);
  }
  if (!tag) throw ParseError("no data rows", line_no);
  d.tag = *tag;
  if (is_labeled_tag(d.tag)) d.labels = std::move(labels);
  return d;
}

}  // namespace dul
