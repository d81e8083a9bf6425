#pragma once

#include <stdexcept>
#include <string>

namespace nilm {

// Configuration is malformed or internally inconsistent. CLI exit code 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Input data is missing, corrupt, or fails validation. CLI exit code 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

struct ShapeMismatchError : std::invalid_argument {
  explicit ShapeMismatchError(const std::string& what) : std::invalid_argument(what) {}
};

// No spectral bin falls inside the requested search band.
struct BandEmptyError : std::invalid_argument {
  explicit BandEmptyError(const std::string& what) : std::invalid_argument(what) {}
};

struct ZeroVoltageError : std::invalid_argument {
  explicit ZeroVoltageError(const std::string& what) : std::invalid_argument(what) {}
};

// Signal too short for the requested transform.
struct TooShortError : std::invalid_argument {
  explicit TooShortError(const std::string& what) : std::invalid_argument(what) {}
};

// Uniqueness requirement cannot be met (more tuples requested than exist).
struct ExhaustedError : std::runtime_error {
  explicit ExhaustedError(const std::string& what) : std::runtime_error(what) {}
};

struct EmptySubsetError : std::invalid_argument {
  explicit EmptySubsetError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace nilm
