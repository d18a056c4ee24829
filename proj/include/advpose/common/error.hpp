#pragma once

#include <stdexcept>
#include <string>

namespace advpose {

// Base of every error raised by the library. Callers that only need a
// diagnostic can catch this; the subclasses exist so tests and the CLI can
// map failures onto exit codes and HTTP statuses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public Error {
 public:
  FormatError(const std::string& what, int line = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class DegenerateAngleError : public DomainError {
 public:
  using DomainError::DomainError;
};

class ProjectionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(const std::string& what, std::string path)
      : Error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, std::string endpoint, int attempts)
      : Error(what + " [endpoint=" + endpoint + ", attempts=" + std::to_string(attempts) + "]"),
        endpoint_(std::move(endpoint)),
        attempts_(attempts) {}
  const std::string& endpoint() const noexcept { return endpoint_; }
  int attempts() const noexcept { return attempts_; }

 private:
  std::string endpoint_;
  int attempts_;
};

class TransportTimeout : public TransportError {
 public:
  using TransportError::TransportError;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class CapabilityError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace advpose
