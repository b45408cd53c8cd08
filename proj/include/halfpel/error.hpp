#pragma once

#include <stdexcept>
#include <string>

namespace halfpel {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller violated an operation's documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration: bad manifest, bad hyperparameters, inconsistent
// network shapes, missing model files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

enum class PgmErrorKind { kMalformedHeader, kUnsupportedMaxval, kTruncatedPayload };

class PgmParseError : public Error {
 public:
  PgmParseError(PgmErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  PgmErrorKind kind() const { return kind_; }

 private:
  PgmErrorKind kind_;
};

// Errors raised while decoding the binary weight and dataset-shard formats.
enum class FormatErrorKind { kBadMagic, kBadVersion, kShapeMismatch, kPayloadSize, kTagMismatch };

class FormatError : public Error {
 public:
  FormatError(FormatErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  FormatErrorKind kind() const { return kind_; }

 private:
  FormatErrorKind kind_;
};

}  // namespace halfpel
