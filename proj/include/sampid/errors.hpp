// Copyright 2026 The sampid Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SAMPID_ERRORS_HPP_
#define SAMPID_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace sampid {

// Two families: configuration problems (bad input, exit code 2) and
// numerical failures (divergence, failed optimization, exit code 3).

class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public ConfigurationError {
 public:
  using ConfigurationError::ConfigurationError;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleParameter : public NumericalError {
 public:
  InfeasibleParameter(const std::string& what, double eigenvalue)
      : NumericalError(what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const { return eigenvalue_; }

 private:
  double eigenvalue_;
};

class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& field, double time, long step = -1)
      : NumericalError("divergence: non-finite '" + field + "' at t=" +
                       std::to_string(time) +
                       (step >= 0 ? " (step " + std::to_string(step) + ")"
                                  : std::string())),
        field_(field),
        time_(time),
        step_(step) {}
  const std::string& field() const { return field_; }
  double time() const { return time_; }
  long step() const { return step_; }

 private:
  std::string field_;
  double time_;
  long step_;
};

class OptimizationFailed : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EvaluationFailed : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SensitivityFailed : public NumericalError {
 public:
  SensitivityFailed(std::size_t parameter, const std::string& reason)
      : NumericalError("sensitivity failed for parameter " +
                       std::to_string(parameter) + ": " + reason),
        parameter_(parameter) {}
  std::size_t parameter() const { return parameter_; }

 private:
  std::size_t parameter_;
};

class ExcitationFailed : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace sampid

#endif  // SAMPID_ERRORS_HPP_
