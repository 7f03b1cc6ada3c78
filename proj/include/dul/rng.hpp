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
#include <vector>

namespace dul {

/// Named substreams. Each purpose draws from its own generator so that, for
/// example, changing the number of training epochs does not move the data.
enum class Stream : std::uint64_t {
  init = 1,
  data_id = 2,
  data_cov = 3,
  data_sem_train = 4,
  data_sem_test = 5,
  batching = 6,
  pool = 7,
  fuzz = 8,
};

/// xoshiro256** seeded through SplitMix64.
///
/// The algorithm is fixed so a (seed, stream) pair yields the same sequence on
/// every platform:
///   state      = four successive SplitMix64 outputs, starting from
///                seed ^ (0x9E3779B97F4A7C15 * stream_id)
///   uniform()  = (next() >> 11) * 2^-53, in [0, 1)
///   normal()   = Box-Muller cosine branch on two uniforms, one value per call
///   below(n)   = Lemire's multiply-shift with rejection
/// std::*_distribution is deliberately not used; its output is not specified.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  Rng(std::uint64_t seed, Stream stream);
  Rng(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next();
  double uniform();
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace dul
