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

namespace dul {

// Gamma-family special functions on the positive real axis. All throw
// DomainError for x <= 0 or non-finite x.

/// ln Gamma(x). Lanczos approximation (g = 7, 9 terms) with reflection below
/// x = 0.5; relative error below 1e-13 on [1e-3, 1e6] away from the zeros at
/// x = 1 and x = 2, where the absolute error is below 1e-15.
double lgamma(double x);

/// psi(x) = d/dx ln Gamma(x). Upward recurrence to x >= 10 followed by the
/// asymptotic expansion.
double digamma(double x);

/// psi_1(x) = d/dx psi(x).
double trigamma(double x);

}  // namespace dul
