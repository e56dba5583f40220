#pragma once

#include <stdexcept>
#include <string>

namespace dlmp {

// Bad caller-supplied value: dimension mismatch, out-of-range weight, etc.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised while reading a MATPOWER case file.
class CaseError : public std::runtime_error {
 public:
  enum class Kind { Syntax, Topology, MissingSubstation };

  CaseError(Kind kind, std::string message, int line = 0, long bus = -1)
      : std::runtime_error(std::move(message)), kind_(kind), line_(line), bus_(bus) {}

  Kind kind() const noexcept { return kind_; }
  // 1-based line in the case text, 0 when not tied to a line.
  int line() const noexcept { return line_; }
  // External bus number, -1 when not tied to a bus.
  long bus() const noexcept { return bus_; }

 private:
  Kind kind_;
  int line_;
  long bus_;
};

// Invalid run configuration or missing input file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite gradient or value.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(std::string message, int iteration)
      : std::runtime_error(std::move(message)), iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

}  // namespace dlmp
