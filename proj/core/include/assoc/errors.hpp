#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace assoc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Non-finite values reaching a numeric routine.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Zero-norm columns or embeddings that cannot be normalized.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// A caller broke a documented precondition (e.g. unnormalized classifier).
class ContractError : public Error {
 public:
  using Error::Error;
};

class EmptySetError : public Error {
 public:
  using Error::Error;
};

class MappingError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

class SpecError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss. `step` is the epoch or iteration
// index at which it happened.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& stage, std::size_t step)
      : Error(stage + " diverged at step " + std::to_string(step)),
        stage_(stage),
        step_(step) {}

  const std::string& stage() const noexcept { return stage_; }
  std::size_t step() const noexcept { return step_; }

 private:
  std::string stage_;
  std::size_t step_;
};

}  // namespace assoc
