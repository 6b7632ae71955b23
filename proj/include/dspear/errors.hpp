#pragma once

#include <stdexcept>
#include <string>

namespace dspear {

// Bad input data: malformed files, unusable corpora, inconsistent traces.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration: unknown keys, out-of-range parameters, missing models.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AudioFormatError : public DataError {
 public:
  using DataError::DataError;
};

class ModelFormatError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace dspear
