// Copyright 2026 The mia Authors
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

#include <stdexcept>
#include <string>

namespace mia {

/// Failure categories. Each maps to a distinct process exit code in the CLI.
enum class ErrorKind {
  kConfig = 2,
  kData = 3,
  kModel = 4,
  kTraining = 5,
  kCalibration = 6,
  kEvaluation = 7,
  kDomain = 8,
  kNumerical = 9,
  kIo = 10,
};

inline const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kData: return "data";
    case ErrorKind::kModel: return "model";
    case ErrorKind::kTraining: return "training";
    case ErrorKind::kCalibration: return "calibration";
    case ErrorKind::kEvaluation: return "evaluation";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::kConfig, w) {}
};
struct DataError : Error {
  explicit DataError(const std::string& w) : Error(ErrorKind::kData, w) {}
};
struct ModelError : Error {
  explicit ModelError(const std::string& w) : Error(ErrorKind::kModel, w) {}
};
struct CalibrationError : Error {
  explicit CalibrationError(const std::string& w)
      : Error(ErrorKind::kCalibration, w) {}
};
struct EvaluationError : Error {
  explicit EvaluationError(const std::string& w)
      : Error(ErrorKind::kEvaluation, w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::kDomain, w) {}
};
struct NumericalError : Error {
  explicit NumericalError(const std::string& w)
      : Error(ErrorKind::kNumerical, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::kIo, w) {}
};

/// Training failure. Carries the gradient norm reached when the iteration
/// cap was hit, if any.
class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& w, double grad_norm = -1.0)
      : Error(ErrorKind::kTraining, w), grad_norm_(grad_norm) {}
  double grad_norm() const noexcept { return grad_norm_; }

 private:
  double grad_norm_;
};

}  // namespace mia
