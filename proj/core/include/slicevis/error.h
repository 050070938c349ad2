/*
 * Copyright 2026 The slicevis Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SLICEVIS_ERROR_H_
#define SLICEVIS_ERROR_H_

#include <stdexcept>
#include <string>

namespace slicevis {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data, invalid roles, unknown columns or levels.
class DataError : public Error {
 public:
  using Error::Error;
};

// Fitting or prediction failed (singular design, schema mismatch, ...).
class ModelError : public Error {
 public:
  using Error::Error;
};

// An external model server was unreachable, timed out, or answered with
// something that does not follow the predict wire format.
class ProtocolError : public ModelError {
 public:
  using ModelError::ModelError;
};

// A request that is well-formed but not valid for the current state, e.g. a
// tour step outside the active tour.
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace slicevis

#endif  // SLICEVIS_ERROR_H_
