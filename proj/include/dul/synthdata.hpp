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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "dul/mlp.hpp"

namespace dul {

/// Which of the distribution roles a dataset plays.
enum class DistTag { id, cov, sem_train, sem_test };

DistTag parse_dist_tag(std::string_view name);
std::string_view to_string(DistTag tag);  // "ID", "COV", "SEM_TRAIN", "SEM_TEST"

using Point2 = std::array<double, 2>;

/// 2-D points with an optional label per point.
/// Invariants: n >= 1; ID and COV carry labels; SEM_* carry none.
struct LabeledDataset {
  std::vector<Point2> points;
  std::optional<std::vector<int>> labels;
  DistTag tag = DistTag::id;
  double noise_eps = 0.0;

  std::size_t size() const { return points.size(); }
  /// Throws InputError when an invariant does not hold.
  void validate() const;
  Matrix inputs() const;
  /// Batch view; labels are copied when present.
  Batch batch() const;
};

/// K isotropic Gaussian blobs, class k centered at angle 2 pi k / K on a circle
/// of the given radius. Points are class-major. Throws InputError for K < 2.
LabeledDataset make_id_blobs(int k, int n_per_class, double radius, double sigma, std::uint64_t seed);

/// Adds i.i.d. N(0, eps^2) noise per coordinate to an ID dataset; returns a COV
/// dataset with the same labels. Throws InputError for non-ID input or eps < 0.
LabeledDataset perturb_covariate(const LabeledDataset& d, double eps, std::uint64_t seed);

enum class SemanticSplit { train, test };

/// Layout of the auxiliary (train) and test-time semantic outliers. Angles are
/// in units of the ID class spacing 2 pi / K.
///   train: K blobs at `radius`, angle k + 1/2 (between the ID classes)
///   test:  K blobs at `radius`, angle k + test_offset, plus a ring segment at
///          `ring_radius` spanning angles [ring_start, ring_start + ring_span)
struct SemanticGeometry {
  int k = 3;
  double radius = 8.0;
  double sigma = 1.0;
  double ring_radius = 12.0;
  double test_offset = 0.25;
  double ring_start = 0.0;
  double ring_span = 1.0;
};

/// Blob centers of one split (the ring segment is not a blob and is excluded).
std::vector<Point2> semantic_centers(SemanticSplit split, const SemanticGeometry& g);

/// Smallest distance between any train center and any test center.
double min_split_center_distance(const SemanticGeometry& g);

/// n unlabeled points; test points cycle through K blobs and the ring segment,
/// train points through K blobs.
LabeledDataset make_semantic_ood(SemanticSplit split, int n, std::uint64_t seed,
                                 const SemanticGeometry& g = {});

/// CSV schema: header "x1,x2,label,tag", label -1 for unlabeled rows, LF endings.
/// noise_eps is not part of the schema and reads back as 0.
void write_dataset_csv(const LabeledDataset& d, const std::filesystem::path& path);
/// Throws ParseError naming the offending line.
LabeledDataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace dul
