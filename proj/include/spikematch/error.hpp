#pragma once

#include <stdexcept>
#include <string>

namespace spikematch {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Vector/tensor lengths or shapes that do not line up.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// NaN/Inf where a finite value is required.
class NumericError : public Error {
public:
  using Error::Error;
};

/// A precondition on argument values was violated (non-binary spikes,
/// out-of-range index, invalid distribution, ...).
class ContractError : public Error {
public:
  using Error::Error;
};

/// Invalid configuration key or value.
class ConfigError : public Error {
public:
  ConfigError(std::string key, const std::string &what)
      : Error(what), key_(std::move(key)) {}
  const std::string &key() const noexcept { return key_; }

private:
  std::string key_;
};

/// Malformed binary file (dataset or checkpoint).
class FormatError : public Error {
public:
  enum class Kind { bad_magic, truncated, label_out_of_range, bad_version, invalid_header, io };

  FormatError(Kind kind, const std::string &what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

} // namespace spikematch
