#pragma once

#include <stdexcept>
#include <string>

namespace nwc {

// Invalid domain values (out-of-range cells, malformed sequences, bad crops).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid run configuration (geometry too small, infeasible depth, bad paths).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Model spec incompatible with the target grid (divisibility, kernel parity).
class BuildError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Degenerate synthetic scene at some frame index.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset/file decoding failures, each with a distinct code.
class DecodeError : public std::runtime_error {
 public:
  enum class Code { bad_magic, truncated, checksum_mismatch, bad_value };

  DecodeError(Code code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Code code() const { return code_; }

 private:
  Code code_;
};

// External forecast could not be matched to targets.
class PairingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nwc
