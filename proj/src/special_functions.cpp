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


#include "dul/special_functions.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "dul/errors.hpp"

namespace dul {
namespace {

void require_positive(double x, const char* fn) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw DomainError(std::string(fn) + ": argument must be finite and positive, got " +
                      std::to_string(x));
  }
}

// Lanczos coefficients for g = 7, n = 9.
constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

// Below this the asymptotic series is not used; recurrence shifts x up first.
constexpr double kAsymptoticFrom = 10.0;

double lgamma_lanczos(double x) {
  // Gamma(x) = Gamma(z + 1) with z = x - 1.
  const double z = x - 1.0;
  double series = kLanczos[0];
  for (std::size_t i = 1; i < kLanczos.size(); ++i) {
    series += kLanczos[i] / (z + static_cast<double>(i));
  }
  const double t = z + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t +
         std::log(series);
}

}  // namespace

double lgamma(double x) {
  require_positive(x, "lgamma");
  if (x < 0.5) {
    // Reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x).
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - lgamma_lanczos(1.0 - x);
  }
  return lgamma_lanczos(x);
}

double digamma(double x) {
  require_positive(x, "digamma");
  double shift = 0.0;
  while (x < kAsymptoticFrom) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // -sum B_{2n} / (2n x^{2n}), n = 1..7, Horner in 1/x^2.
  const double tail =
      inv2 * (-1.0 / 12.0 +
              inv2 * (1.0 / 120.0 +
                      inv2 * (-1.0 / 252.0 +
                              inv2 * (1.0 / 240.0 +
                                      inv2 * (-1.0 / 132.0 +
                                              inv2 * (691.0 / 32760.0 + inv2 * (-1.0 / 12.0)))))));
  return shift + std::log(x) - 0.5 * inv + tail;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double shift = 0.0;
  while (x < kAsymptoticFrom) {
    shift += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // 1/x + 1/(2x^2) + sum B_{2n} / x^{2n+1}, n = 1..7.
  const double tail =
      inv * inv2 *
      (1.0 / 6.0 +
       inv2 * (-1.0 / 30.0 +
               inv2 * (1.0 / 42.0 +
                       inv2 * (-1.0 / 30.0 +
                               inv2 * (5.0 / 66.0 + inv2 * (-691.0 / 2730.0 + inv2 * (7.0 / 6.0)))))));
  return shift + inv + 0.5 * inv2 + tail;
}

}  // namespace dul
