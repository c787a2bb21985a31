/*
 * Copyright 2026 The tiltlab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace tiltlab {

// Base of every library-raised failure. Precondition violations on plain
// arguments use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An enumeration or block law would exceed its configured size cap.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

// The conditioning event or constraint set has no admissible point.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// A Monte Carlo sampler produced too few accepted draws to form an estimate.
class SamplingError : public Error {
 public:
  using Error::Error;
};

// The KL minimizer over the constraint set is not unique.
class NonUniqueProjection : public Error {
 public:
  using Error::Error;
};

// An iterative solver failed to reach its tolerance.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace tiltlab
