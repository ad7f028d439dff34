#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfwi {

// Exception hierarchy shared by every module. The CLI maps these onto exit
// codes (2 config, 3 numeric, 4 I/O).

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Malformed binary file. `offset` is the byte position where parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Time step violates the CFL bound of the stencil.
class StabilityError : public NumericError {
 public:
  StabilityError(const std::string& what, double required_dt)
      : NumericError(what), required_dt_(required_dt) {}
  double required_dt() const noexcept { return required_dt_; }

 private:
  double required_dt_;
};

/// Non-finite wavefield detected during time stepping.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, int step)
      : NumericError(what + " at step " + std::to_string(step)), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

class ResourceError : public std::runtime_error {
 public:
  ResourceError(const std::string& what, int suggested_interval)
      : std::runtime_error(what), suggested_interval_(suggested_interval) {}
  int suggested_checkpoint_interval() const noexcept { return suggested_interval_; }

 private:
  int suggested_interval_;
};

struct ArchitectureError : InvalidArgument {
  using InvalidArgument::InvalidArgument;
};

struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Configuration validation failure; carries every offending key.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string out = "invalid configuration:";
    for (const auto& s : p) out += "\n  " + s;
    return out;
  }
  std::vector<std::string> problems_;
};

}  // namespace sfwi
