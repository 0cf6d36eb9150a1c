#pragma once

#include <stdexcept>
#include <string>

namespace fastsync {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside an operation's mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class MissingComponentError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Fewer than two usable clusters came out of DBSCAN.
class ClusteringDegenerateError : public Error {
 public:
  using Error::Error;
};

class InvalidParametersError : public Error {
 public:
  using Error::Error;
};

// The quorum alpha*N cannot be reached with the clustered workers.
class InfeasibilityError : public Error {
 public:
  InfeasibilityError(const std::string& what, double required, double available)
      : Error(what), required_(required), available_(available) {}

  double required() const noexcept { return required_; }
  double available() const noexcept { return available_; }

 private:
  double required_;
  double available_;
};

class InternalConsistencyError : public Error {
 public:
  using Error::Error;
};

// A worker received an event its current phase cannot accept.
class ProtocolViolationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, int line, const std::string& message)
      : Error(format(key, line, message)), key_(key), line_(line), message_(message) {}

  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }
  const std::string& message() const noexcept { return message_; }

 private:
  static std::string format(const std::string& key, int line, const std::string& message) {
    std::string out = "config";
    if (line > 0) out += " line " + std::to_string(line);
    if (!key.empty()) out += " key '" + key + "'";
    return out + ": " + message;
  }

  std::string key_;
  int line_;
  std::string message_;
};

// Row-level trace file problem; row is 1-based and counts the header.
class TraceFormatError : public Error {
 public:
  TraceFormatError(int row, const std::string& message)
      : Error("trace row " + std::to_string(row) + ": " + message), row_(row) {}

  int row() const noexcept { return row_; }

 private:
  int row_;
};

}  // namespace fastsync
